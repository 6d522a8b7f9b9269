"""Config files for the CLI: TOML with per-command sections.

Paths in [experiment]/[ablate] resolve against SSL_KERNEL_DATA_DIR when
relative.  Every section is validated up front so a bad config fails before
any work starts.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .kernels import Linear, Polynomial, RBF

DATA_DIR_ENV = "SSL_KERNEL_DATA_DIR"


class ConfigError(Exception):
    """Invalid or missing configuration."""


class ResourceCapError(Exception):
    """A run would exceed the configured sample cap."""


def load_toml(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _section(raw, name):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _get(sec, name, key, kind, default=None, required=False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{name}] is missing required key {key!r}")
        return default
    val = sec[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"[{name}] {key} must be {kind.__name__}, got {val!r}")
    return val


def _get_list(sec, name, key, kind, default=None, required=False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{name}] is missing required key {key!r}")
        return default
    val = sec[key]
    if not isinstance(val, list) or not val:
        raise ConfigError(f"[{name}] {key} must be a nonempty list")
    out = []
    for item in val:
        if kind is float and isinstance(item, int) and not isinstance(item, bool):
            item = float(item)
        if not isinstance(item, kind):
            raise ConfigError(f"[{name}] {key} entries must be {kind.__name__}")
        out.append(item)
    return out


def _choice(sec, name, key, choices, default):
    val = _get(sec, name, key, str, default)
    if val not in choices:
        raise ConfigError(f"[{name}] {key} must be one of {sorted(choices)}")
    return val


def _rep_dim(sec, name):
    val = sec.get("k", "full")
    if val == "full":
        return None
    if isinstance(val, int) and not isinstance(val, bool) and val >= 1:
        return val
    raise ConfigError(f"[{name}] k must be a positive integer or 'full'")


def resolve_data_path(value):
    path = Path(value)
    if path.is_absolute():
        return path
    root = os.environ.get(DATA_DIR_ENV, "")
    return (Path(root) / path) if root else path


@dataclass
class CommonCfg:
    seed: int = 0
    out_dir: Path = Path("out")
    workers: int = 1


def parse_common(raw, overrides=None):
    sec = _section(raw, "common")
    cfg = CommonCfg(
        seed=_get(sec, "common", "seed", int, 0),
        out_dir=Path(_get(sec, "common", "out_dir", str, "out")),
        workers=_get(sec, "common", "workers", int, 1),
    )
    overrides = overrides or {}
    if overrides.get("seed") is not None:
        cfg.seed = overrides["seed"]
    if overrides.get("out") is not None:
        cfg.out_dir = Path(overrides["out"])
    if overrides.get("workers") is not None:
        cfg.workers = overrides["workers"]
    if cfg.workers < 1:
        raise ConfigError("[common] workers must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("[common] seed must be nonnegative")
    return cfg


def parse_kernel(raw):
    sec = _section(raw, "kernel")
    kind = _choice(sec, "kernel", "kind", {"rbf", "linear", "polynomial"}, "rbf")
    if kind == "rbf":
        sigma = _get(sec, "kernel", "sigma", float, 1.0)
        if sigma <= 0:
            raise ConfigError("[kernel] sigma must be positive")
        return RBF(sigma)
    if kind == "linear":
        return Linear()
    degree = _get(sec, "kernel", "degree", int, 2)
    coef = _get(sec, "kernel", "coef", float, 1.0)
    if degree < 1:
        raise ConfigError("[kernel] degree must be >= 1")
    return Polynomial(degree, coef)


@dataclass
class SpiralCfg:
    n_per_arm: int = 100
    sigma: float = 1.0
    beta: float = 0.4
    loss: str = "noncontrastive"
    k: "int | None" = None
    # Base-kernel thresholds for the neighborhood graph: edges exist where
    # k(x, x') > d, so the LOW threshold is the run whose neighborhoods are
    # wide enough to bridge the two arms.
    d_local: float = 0.05
    d_shortcircuit: float = 0.004
    n_anchors: int = 3
    # Arm parameter range in multiples of pi.
    t_min_pi: float = 1.5
    t_max_pi: float = 4.5


def parse_spiral(raw):
    sec = _section(raw, "spiral")
    cfg = SpiralCfg(
        n_per_arm=_get(sec, "spiral", "n_per_arm", int, 100),
        sigma=_get(sec, "spiral", "sigma", float, 1.0),
        beta=_get(sec, "spiral", "beta", float, 0.4),
        loss=_choice(sec, "spiral", "loss", {"contrastive", "noncontrastive"}, "noncontrastive"),
        k=_rep_dim(sec, "spiral"),
        d_local=_get(sec, "spiral", "d_local", float, 0.05),
        d_shortcircuit=_get(sec, "spiral", "d_shortcircuit", float, 0.004),
        n_anchors=_get(sec, "spiral", "n_anchors", int, 3),
        t_min_pi=_get(sec, "spiral", "t_min_pi", float, 1.5),
        t_max_pi=_get(sec, "spiral", "t_max_pi", float, 4.5),
    )
    if cfg.n_per_arm < 2:
        raise ConfigError("[spiral] n_per_arm must be >= 2")
    if not 0.0 < cfg.t_min_pi < cfg.t_max_pi:
        raise ConfigError("[spiral] need 0 < t_min_pi < t_max_pi")
    if not 0.0 <= cfg.d_shortcircuit < cfg.d_local:
        raise ConfigError("[spiral] thresholds must satisfy 0 <= d_shortcircuit < d_local")
    if cfg.n_anchors < 1 or cfg.n_anchors > 2 * cfg.n_per_arm:
        raise ConfigError("[spiral] n_anchors out of range")
    return cfg


@dataclass
class DatasetCfg:
    train_images: Path = None
    train_labels: Path = None
    test_images: Path = None
    test_labels: Path = None


def parse_dataset(sec, name):
    paths = {}
    for key in ("train_images", "train_labels", "test_images", "test_labels"):
        raw_path = _get(sec, name, key, str, required=True)
        paths[key] = resolve_data_path(raw_path)
    return DatasetCfg(**paths)


@dataclass
class AugmentCfg:
    sigma_b: float = 2.0
    rot_deg: float = 10.0
    trans_frac: float = 0.1
    scale_min: float = 0.9
    scale_max: float = 1.1


def parse_augment_params(sec, name):
    cfg = AugmentCfg(
        sigma_b=_get(sec, name, "sigma_b", float, 2.0),
        rot_deg=_get(sec, name, "rot_deg", float, 10.0),
        trans_frac=_get(sec, name, "trans_frac", float, 0.1),
        scale_min=_get(sec, name, "scale_min", float, 0.9),
        scale_max=_get(sec, name, "scale_max", float, 1.1),
    )
    if cfg.sigma_b <= 0:
        raise ConfigError(f"[{name}] sigma_b must be positive")
    if cfg.scale_min > cfg.scale_max:
        raise ConfigError(f"[{name}] empty scale range")
    return cfg


@dataclass
class ExperimentCfg:
    dataset: DatasetCfg = None
    n_train: list = field(default_factory=lambda: [64])
    n_aug: list = field(default_factory=lambda: [32])
    augmentations: list = field(default_factory=lambda: ["affine", "gaussian_blur"])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    n_test: int = 2000
    loss: str = "contrastive"
    beta: float = 0.4
    k: "int | None" = None
    adjacency: str = "clique"
    svm_c: float = 1000.0
    augment: AugmentCfg = None
    max_samples: int = 5000


def parse_experiment(raw):
    sec = _section(raw, "experiment")
    cfg = ExperimentCfg(
        dataset=parse_dataset(sec, "experiment"),
        n_train=_get_list(sec, "experiment", "n_train", int, [64]),
        n_aug=_get_list(sec, "experiment", "n_aug", int, [32]),
        augmentations=_get_list(
            sec, "experiment", "augmentations", str, ["affine", "gaussian_blur"]
        ),
        seeds=_get_list(sec, "experiment", "seeds", int, [0, 1, 2]),
        n_test=_get(sec, "experiment", "n_test", int, 2000),
        loss=_choice(sec, "experiment", "loss", {"contrastive", "noncontrastive"}, "contrastive"),
        beta=_get(sec, "experiment", "beta", float, 0.4),
        k=_rep_dim(sec, "experiment"),
        adjacency=_choice(sec, "experiment", "adjacency", {"clique", "star"}, "clique"),
        svm_c=_get(sec, "experiment", "svm_c", float, 1000.0),
        augment=parse_augment_params(sec, "experiment"),
        max_samples=_get(sec, "experiment", "max_samples", int, 5000),
    )
    for aug in cfg.augmentations:
        if aug not in ("affine", "gaussian_blur"):
            raise ConfigError(f"[experiment] unknown augmentation {aug!r}")
    if min(cfg.seeds) < 0:
        raise ConfigError("[experiment] seeds must be nonnegative")
    if cfg.svm_c <= 0:
        raise ConfigError("[experiment] svm_c must be positive")
    if min(cfg.n_train) < 1 or min(cfg.n_aug) < 1 or cfg.n_test < 1:
        raise ConfigError("[experiment] sizes must be positive")
    worst = max(cfg.n_train) * (1 + max(cfg.n_aug))
    if worst > cfg.max_samples:
        raise ResourceCapError(
            f"cell of {worst} samples exceeds max_samples={cfg.max_samples}"
        )
    return cfg


@dataclass
class AblateCfg:
    dataset: DatasetCfg = None
    n_train: int = 32
    n_aug: int = 8
    augmentation: str = "affine"
    seed: int = 0
    n_test: int = 500
    k_grid: list = field(default_factory=lambda: [1, 8, 32, 128])
    c_grid: list = field(default_factory=lambda: [0.1, 10.0, 1000.0])
    beta_grid: list = field(default_factory=lambda: [0.01, 0.1, 1.0])
    adjacency: str = "clique"
    svm_c: float = 1000.0
    augment: AugmentCfg = None
    max_samples: int = 5000


def parse_ablate(raw):
    sec = _section(raw, "ablate")
    cfg = AblateCfg(
        dataset=parse_dataset(sec, "ablate"),
        n_train=_get(sec, "ablate", "n_train", int, 32),
        n_aug=_get(sec, "ablate", "n_aug", int, 8),
        augmentation=_choice(sec, "ablate", "augmentation", {"affine", "gaussian_blur"}, "affine"),
        seed=_get(sec, "ablate", "seed", int, 0),
        n_test=_get(sec, "ablate", "n_test", int, 500),
        k_grid=_get_list(sec, "ablate", "k_grid", int, [1, 8, 32, 128]),
        c_grid=_get_list(sec, "ablate", "c_grid", float, [0.1, 10.0, 1000.0]),
        beta_grid=_get_list(sec, "ablate", "beta_grid", float, [0.01, 0.1, 1.0]),
        adjacency=_choice(sec, "ablate", "adjacency", {"clique", "star"}, "clique"),
        svm_c=_get(sec, "ablate", "svm_c", float, 1000.0),
        augment=parse_augment_params(sec, "ablate"),
        max_samples=_get(sec, "ablate", "max_samples", int, 5000),
    )
    total = cfg.n_train * (1 + cfg.n_aug)
    if total > cfg.max_samples:
        raise ResourceCapError(
            f"cell of {total} samples exceeds max_samples={cfg.max_samples}"
        )
    if max(cfg.k_grid) > total:
        raise ConfigError("[ablate] k_grid exceeds the SSL dataset size")
    if cfg.seed < 0:
        raise ConfigError("[ablate] seed must be nonnegative")
    return cfg


@dataclass
class SdpCheckCfg:
    n_pairs: int = 8
    sigma: float = 1.0
    batch_size: int = 8
    loss: str = "contrastive"
    beta: float = 0.5
    k: "int | None" = None
    tol: float = 1e-6
    max_iter: int = 5000
    seed: int = 0
    n_cap: int = 200


def parse_sdp_check(raw):
    sec = _section(raw, "sdp_check")
    cfg = SdpCheckCfg(
        n_pairs=_get(sec, "sdp_check", "n_pairs", int, 8),
        sigma=_get(sec, "sdp_check", "sigma", float, 1.0),
        batch_size=_get(sec, "sdp_check", "batch_size", int, 16),
        loss=_choice(sec, "sdp_check", "loss", {"contrastive", "noncontrastive"}, "contrastive"),
        beta=_get(sec, "sdp_check", "beta", float, 0.5),
        k=_rep_dim(sec, "sdp_check"),
        tol=_get(sec, "sdp_check", "tol", float, 1e-6),
        max_iter=_get(sec, "sdp_check", "max_iter", int, 5000),
        seed=_get(sec, "sdp_check", "seed", int, 0),
        n_cap=_get(sec, "sdp_check", "n_cap", int, 200),
    )
    if cfg.tol <= 0:
        raise ConfigError("[sdp_check] tol must be positive")
    if cfg.seed < 0:
        raise ConfigError("[sdp_check] seed must be nonnegative")
    if cfg.n_pairs < 1 or cfg.batch_size < 2:
        raise ConfigError("[sdp_check] n_pairs and batch_size must be positive")
    if 2 * cfg.n_pairs > cfg.n_cap:
        raise ResourceCapError(
            f"sdp check over {2 * cfg.n_pairs} points exceeds n_cap={cfg.n_cap}"
        )
    return cfg
