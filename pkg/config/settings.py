from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Tuple

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


def load_config_file(path: str) -> Dict[str, str]:
    """Read a key=value experiment file; blank lines and # comments are skipped."""
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    values: Dict[str, str] = {}
    for line in config_path.read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, value = parse_config_line(stripped)
        values[key] = value
    return values


def parse_config_line(line: str) -> Tuple[str, str]:
    key, value = line.split("=", 1)
    return key.strip().replace("-", "_"), value.strip().strip('"').strip("'")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="WALSH_", env_file=".env", case_sensitive=False, extra="ignore")

    project_name: str = "walsh-logmeans"
    log_level: str = "WARNING"

    kernel_cache_size: int = 512
    # largest n * 2^K for which kernels are summed directly in "auto" mode
    direct_kernel_budget: int = 1 << 22

    luxemburg_max_iter: int = 200
    luxemburg_rtol: float = 1e-10

    omega_divisor: float = 16.0
    omega_offset: float = 32768.0
    default_tilde: int = 2
    est1_constant: float = 0.25

    default_sweep: str = "4,8,16,32,64"
    csv_precision: int = 17
    workers: int = 1
    seed: int = 0

    @field_validator("log_level", mode="before")
    def normalise_level(cls, value):  # noqa: N805
        return str(value).upper()

    @field_validator("default_sweep", mode="before")
    def join_sweep(cls, value):  # noqa: N805
        if isinstance(value, (list, tuple)):
            return ",".join(str(v) for v in value)
        return value

    @property
    def sweep_orders(self) -> List[int]:
        return [int(v) for v in self.default_sweep.split(",") if v.strip()]

    def omega_constants(self) -> Dict[str, float]:
        return {"divisor": self.omega_divisor, "offset": self.omega_offset}


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
