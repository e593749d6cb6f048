from __future__ import annotations

from dataclasses import dataclass

CSV_HEADER = (
    "episode", "step", "device_id", "available", "R_t", "T_t", "action", "feasible",
    "reward", "acc", "client_load", "straggler", "epsilon", "q_loss",
)


def fmt_float(x: float) -> str:
    return f"{x:.9g}"


@dataclass
class RoundRecord:
    episode: int
    step: int
    device_id: int
    available: bool
    R_t: float
    T_t: float
    action: int | None
    feasible: bool
    reward: float
    acc: float
    client_load: float
    straggler: bool
    epsilon: float
    q_loss: float | None = None

    def csv_row(self) -> list[str]:
        return [
            str(self.episode),
            str(self.step),
            str(self.device_id),
            str(int(self.available)),
            fmt_float(self.R_t),
            fmt_float(self.T_t),
            "" if self.action is None else str(self.action),
            str(int(self.feasible)),
            fmt_float(self.reward),
            fmt_float(self.acc),
            fmt_float(self.client_load),
            str(int(self.straggler)),
            fmt_float(self.epsilon),
            "" if self.q_loss is None else fmt_float(self.q_loss),
        ]
