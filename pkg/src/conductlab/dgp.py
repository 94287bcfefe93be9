"""Synthetic market data: exogenous draws mapped through the closed-form equilibrium."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, DomainError
from .model import ExogenousDraw, StructuralParams, solve_equilibrium

COLUMNS = ("log_p", "log_q", "log_x1d", "log_x2d", "log_x1s", "log_x2s", "z1s", "z2s")

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class DgpConfig:
    params: StructuralParams = field(default_factory=StructuralParams)
    sample_size: int = 100
    seed: int = 0
    shifter_low: float = 1.0
    shifter_high: float = 3.0
    instrument_noise_sd: float = 1.0

    def __post_init__(self):
        problems = []
        if not (isinstance(self.sample_size, (int, np.integer)) and self.sample_size >= 1):
            problems.append(f"sample_size must be a positive integer, got {self.sample_size!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed <= _UINT64_MAX):
            problems.append(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 0 < self.shifter_low <= self.shifter_high:
            # equal bounds are allowed and give a degenerate uniform
            problems.append(
                "need 0 < shifter_low <= shifter_high, got "
                f"shifter_low={self.shifter_low}, shifter_high={self.shifter_high}"
            )
        if not self.instrument_noise_sd >= 0:
            problems.append(
                f"instrument_noise_sd must be non-negative, got {self.instrument_noise_sd}"
            )
        if problems:
            raise DomainError("; ".join(problems))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def draw_exogenous(config: DgpConfig, rng: np.random.Generator, size: int | None = None) -> ExogenousDraw:
    """Draw shifters, instruments and errors for ``size`` markets.

    Each quantity is drawn as one block of ``size`` values, in the fixed order
    x1d, x2d, x1s, x2s, instrument noise 1 and 2, eps_d, eps_s. A seed
    therefore pins down the whole sample.
    """
    n = config.sample_size if size is None else size
    lo, hi = config.shifter_low, config.shifter_high
    x1d = rng.uniform(lo, hi, n)
    x2d = rng.uniform(lo, hi, n)
    x1s = rng.uniform(lo, hi, n)
    x2s = rng.uniform(lo, hi, n)
    noise1 = rng.normal(0.0, config.instrument_noise_sd, n)
    noise2 = rng.normal(0.0, config.instrument_noise_sd, n)
    sigma = config.params.sigma
    eps_d = rng.normal(0.0, sigma, n)
    eps_s = rng.normal(0.0, sigma, n)
    return ExogenousDraw(
        x1d=x1d,
        x2d=x2d,
        x1s=x1s,
        x2s=x2s,
        z1s=np.log(x1s) + noise1,
        z2s=np.log(x2s) + noise2,
        eps_d=eps_d,
        eps_s=eps_s,
    )


@dataclass(frozen=True, eq=False)
class MarketDataset:
    """Column-oriented sample of equilibrium outcomes, shifters and instruments.

    All columns are on the log scale. ``seed`` and ``params`` describe how the
    sample was generated and are ``None`` for data read back from CSV.
    """

    log_p: np.ndarray
    log_q: np.ndarray
    log_x1d: np.ndarray
    log_x2d: np.ndarray
    log_x1s: np.ndarray
    log_x2s: np.ndarray
    z1s: np.ndarray
    z2s: np.ndarray
    seed: int | None = None
    params: StructuralParams | None = None

    def __post_init__(self):
        lengths = set()
        for name in COLUMNS:
            col = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if col.ndim != 1:
                raise DatasetFormatError(f"column {name} must be one-dimensional")
            if not np.all(np.isfinite(col)):
                bad = int(np.flatnonzero(~np.isfinite(col))[0])
                raise DatasetFormatError(f"column {name} has a non-finite entry at row {bad}")
            object.__setattr__(self, name, col)
            lengths.add(col.shape[0])
        if len(lengths) != 1:
            raise DatasetFormatError(f"columns have unequal lengths {sorted(lengths)}")

    def __len__(self):
        return self.log_p.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MarketDataset):
            return NotImplemented
        return (
            all(np.array_equal(getattr(self, c), getattr(other, c)) for c in COLUMNS)
            and self.seed == other.seed
            and self.params == other.params
        )

    @property
    def n_obs(self) -> int:
        return len(self)

    def as_array(self) -> np.ndarray:
        """``(T, 8)`` matrix with columns in :data:`COLUMNS` order."""
        return np.column_stack([getattr(self, c) for c in COLUMNS])

    @classmethod
    def from_array(cls, array, **metadata) -> "MarketDataset":
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] != len(COLUMNS):
            raise DatasetFormatError(f"expected a (T, {len(COLUMNS)}) array, got {array.shape}")
        return cls(**{c: array[:, i] for i, c in enumerate(COLUMNS)}, **metadata)

    # -- CSV ---------------------------------------------------------------

    def to_csv(self, path=None) -> str:
        """Write the columns as CSV with 17 significant digits (lossless).

        Returns the text; also writes it to ``path`` when one is given.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.as_array():
            writer.writerow([format(v, ".17g") for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "MarketDataset":
        """Read a CSV file written by :meth:`to_csv`."""
        return cls.parse_csv(Path(path).read_text())

    @classmethod
    def parse_csv(cls, text: str) -> "MarketDataset":
        """Parse CSV text. Malformed input raises :class:`DatasetFormatError`."""
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file: missing header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            raise DatasetFormatError(f"line 1: header is missing column(s) {', '.join(missing)}")
        index = [header.index(c) for c in COLUMNS]

        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetFormatError(
                    f"line {line_no}: expected {len(header)} fields, found {len(row)}"
                )
            values = []
            for col_name, i in zip(COLUMNS, index):
                cell = row[i].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetFormatError(
                        f"line {line_no}, column {col_name}: not a number: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DatasetFormatError(
                        f"line {line_no}, column {col_name}: non-finite value {cell!r}"
                    )
                values.append(value)
            rows.append(values)
        if not rows:
            raise DatasetFormatError("no data rows")
        return cls.from_array(np.array(rows))

    # -- JSON-compatible ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "params": None if self.params is None else self.params.to_dict(),
            "n_obs": len(self),
            "columns": {c: getattr(self, c).tolist() for c in COLUMNS},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MarketDataset":
        try:
            columns = payload["columns"]
            params = payload.get("params")
            return cls(
                **{c: np.asarray(columns[c], dtype=np.float64) for c in COLUMNS},
                seed=payload.get("seed"),
                params=None if params is None else StructuralParams(**params),
            )
        except KeyError as exc:
            raise DatasetFormatError(f"missing key {exc.args[0]!r}") from None


def generate_dataset(config: DgpConfig) -> MarketDataset:
    """Draw ``config.sample_size`` markets and solve each equilibrium."""
    config.params.check_admissible()
    draw = draw_exogenous(config, make_rng(config.seed))
    eq = solve_equilibrium(config.params, draw)
    return MarketDataset(
        log_p=eq.log_p,
        log_q=eq.log_q,
        log_x1d=np.log(draw.x1d),
        log_x2d=np.log(draw.x2d),
        log_x1s=np.log(draw.x1s),
        log_x2s=np.log(draw.x2s),
        z1s=draw.z1s,
        z2s=draw.z2s,
        seed=config.seed,
        params=config.params,
    )
