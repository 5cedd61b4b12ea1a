from dataclasses import dataclass


@dataclass(frozen=True)
class Units:
    """Values of hbar and the particle mass. Natural units by default."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError(f"hbar and mass must be positive, got {self}")


NATURAL = Units()
