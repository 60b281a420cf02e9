from dataclasses import dataclass


@dataclass(frozen=True)
class AdapterConfig:
    """Settings for one served checkpoint.

    input_shape is the per-sample shape the model consumes; incoming requests
    must declare exactly this shape. Samples arrive already in [0,1] and are
    fed to the model as-is: any preprocessing must be baked into the
    checkpoint, never hidden here.
    """

    checkpoint: str
    input_shape: tuple[int, ...]
    device: str = "cpu"
    host: str = "127.0.0.1"
    port: int = 8000
    batch_cap: int = 256

    def __post_init__(self):
        if not self.input_shape or any(d < 1 for d in self.input_shape):
            raise ValueError(f"bad input shape {self.input_shape}")
        if self.batch_cap < 1:
            raise ValueError("batch_cap must be positive")
