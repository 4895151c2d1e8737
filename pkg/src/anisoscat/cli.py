"""Scenario-driven command line front end.

Scenarios are INI files (configparser dialect) with the sections

    [symbol]      blocks = dim:exponent:kind, ...   (kind: positive|signed|negative)
                  j_minus = int    j_plus = int
    [lattice]     axes = points:half_length, ...    (points: power of two)
    [potential]   kind = zero|aniso|iso|sum; c, eps, q, profile, margin,
                  oscillation, compact_radius
    [envelope]    kind = decaying|periodic; form, param, gamma, const,
                  fourier = m:a:b, ...
    [packet]      center, momentum, widths          (comma lists, one per axis)
    [experiment]  kind = admit|evolve|decay-fit|smooth|waveop|invariance|
                  monodromy|spectrum, plus per-kind keys (see README)

Outputs are summary.json plus detail_*.csv files; identical config and seed
produce byte-identical outputs (floats fixed to 12 significant digits, all
randomness drawn from one counter-based Philox stream).
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .admissibility import classify, decay_index
from .enss import build_block_map, decay_fit, scale_ensemble
from .errors import ConfigError, ConvergenceError, GuardViolation
from .field import Lattice, WaveFunction, gaussian_packet, save_wavefunction
from .potential import StaticPotential, TimeEnvelope, build_static, potential_spec
from .propagate import (PropagationPlan, evolve_static, free_evolve,
                        monodromy_apply, named_transform)
from .scatter import (CookResult, cook_wave_operator, intertwining_defect,
                      invariance_compare, scattering_apply, smoothness_integral,
                      timedep_wave_operator, window_state)
from .spectrum import accumulation_study, dense_oracle, discrete_spectrum
from .symbol import BlockSpec, SpectralWindow, make_dispersion

_KIND_ALIASES = {"+": "positive", "positive": "positive", "s": "signed",
                 "signed": "signed", "-": "negative", "negative": "negative"}

_SECTION_ORDER = ("symbol", "lattice", "potential", "envelope", "packet", "experiment")


def round12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round12(v) for v in x]
    return x


def _fail(section: str, key: str, why: str):
    raise ConfigError(f"[{section}] {key}: {why}")


class ScenarioConfig:
    """Typed view over a parsed scenario file."""

    def __init__(self, parser: configparser.ConfigParser):
        self._p = parser

    @classmethod
    def from_path(cls, path) -> "ScenarioConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        return cls(parser)

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.read_string(text)
        return cls(parser)

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return self._p.has_section(section)
        return self._p.has_option(section, key) and self._p.get(section, key).strip() != ""

    def get(self, section: str, key: str, default=None, required: bool = False) -> str:
        if not self.has(section, key):
            if required:
                _fail(section, key, "missing required key")
            return default
        return self._p.get(section, key).strip()

    def get_float(self, section: str, key: str, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return float(Fraction(raw)) if "/" in raw else float(raw)
        except ValueError:
            _fail(section, key, f"not a number: {raw!r}")

    def get_int(self, section: str, key: str, default=None, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            _fail(section, key, f"not an integer: {raw!r}")

    def get_list(self, section: str, key: str, required=False) -> list[str]:
        raw = self.get(section, key, required=required)
        if raw is None:
            return []
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_floats(self, section: str, key: str, required=False) -> list[float]:
        out = []
        for item in self.get_list(section, key, required=required):
            try:
                out.append(float(Fraction(item)) if "/" in item else float(item))
            except ValueError:
                _fail(section, key, f"not a number: {item!r}")
        return out

    def canonical_text(self) -> str:
        buf = io.StringIO()
        names = [s for s in _SECTION_ORDER if self._p.has_section(s)]
        names += [s for s in self._p.sections() if s not in names]
        for name in names:
            buf.write(f"[{name}]\n")
            for key in sorted(self._p.options(name)):
                buf.write(f"{key} = {self._p.get(name, key)}\n")
            buf.write("\n")
        return buf.getvalue()


def build_symbol(cfg: ScenarioConfig):
    blocks = []
    for item in cfg.get_list("symbol", "blocks", required=True):
        parts = item.split(":")
        if len(parts) != 3:
            _fail("symbol", "blocks", f"expected dim:exponent:kind, got {item!r}")
        dim, expo, kind = parts
        if kind.strip() not in _KIND_ALIASES:
            _fail("symbol", "blocks", f"unknown kind {kind.strip()!r}")
        try:
            blocks.append(BlockSpec(int(dim), float(expo), _KIND_ALIASES[kind.strip()]))
        except ValueError as exc:
            _fail("symbol", "blocks", str(exc))
    j_minus = cfg.get_int("symbol", "j_minus", required=True)
    j_plus = cfg.get_int("symbol", "j_plus", required=True)
    try:
        return make_dispersion(blocks, j_minus, j_plus)
    except ValueError as exc:
        _fail("symbol", "blocks", str(exc))


def build_lattice(cfg: ScenarioConfig, sym) -> Lattice:
    axes = []
    for item in cfg.get_list("lattice", "axes", required=True):
        parts = item.split(":")
        if len(parts) != 2:
            _fail("lattice", "axes", f"expected points:half_length, got {item!r}")
        axes.append((int(parts[0]), float(parts[1])))
    try:
        return Lattice(tuple(axes), tuple(b.dim for b in sym.blocks))
    except ValueError as exc:
        _fail("lattice", "axes", str(exc))


def build_potential(cfg: ScenarioConfig, lat: Lattice) -> StaticPotential:
    kind = cfg.get("potential", "kind", default="zero")
    if kind == "zero":
        spec = potential_spec("aniso", 0.0, eps=[0.0] * len(lat.block_dims))
        return build_static(lat, spec)
    if kind not in ("aniso", "iso", "sum"):
        _fail("potential", "kind", f"unknown kind {kind!r}")
    eps = cfg.get_list("potential", "eps")
    kwargs = {}
    for key in ("margin",):
        val = cfg.get_float("potential", key)
        if val is not None:
            kwargs[key] = val
    profile = cfg.get("potential", "profile")
    if profile:
        kwargs["profile"] = profile
    radius = cfg.get_float("potential", "compact_radius")
    if radius is not None:
        kwargs["compact_radius"] = radius
    osc = cfg.get_floats("potential", "oscillation")
    if osc:
        kwargs["oscillation"] = tuple(osc)
    try:
        spec = potential_spec(
            kind,
            cfg.get_float("potential", "c", required=True),
            eps=eps if eps else None,
            q=cfg.get_float("potential", "q"),
            **kwargs,
        )
        return build_static(lat, spec)
    except ValueError as exc:
        _fail("potential", "kind", str(exc))


def build_envelope(cfg: ScenarioConfig) -> TimeEnvelope:
    kind = cfg.get("envelope", "kind", required=True)
    if kind == "decaying":
        return TimeEnvelope(
            kind="decaying",
            form=cfg.get("envelope", "form", default="exp"),
            param=cfg.get_float("envelope", "param", default=1.0),
            gamma=cfg.get_float("envelope", "gamma", default=0.0),
        )
    if kind == "periodic":
        terms = []
        for item in cfg.get_list("envelope", "fourier"):
            parts = item.split(":")
            if len(parts) != 3:
                _fail("envelope", "fourier", f"expected m:a:b, got {item!r}")
            terms.append((int(parts[0]), float(parts[1]), float(parts[2])))
        return TimeEnvelope(kind="periodic", const=cfg.get_float("envelope", "const", default=1.0),
                            fourier=tuple(terms))
    _fail("envelope", "kind", f"unknown kind {kind!r}")


def build_packet(cfg: ScenarioConfig, lat: Lattice) -> WaveFunction:
    center = cfg.get_floats("packet", "center") or [0.0] * lat.ndim
    momentum = cfg.get_floats("packet", "momentum") or [0.0] * lat.ndim
    widths = cfg.get_floats("packet", "widths") or [lat.axes[i][1] / 8.0 for i in range(lat.ndim)]
    try:
        return gaussian_packet(lat, center, momentum, widths)
    except ValueError as exc:
        _fail("packet", "widths", str(exc))


def _window(cfg: ScenarioConfig, key: str = "window") -> SpectralWindow | None:
    raw = cfg.get("experiment", key)
    if raw is None:
        return None
    parts = raw.split(":")
    if len(parts) != 3:
        _fail("experiment", key, f"expected lo:hi:edge, got {raw!r}")
    return SpectralWindow(float(parts[0]), float(parts[1]), float(parts[2]))


def _plan(cfg: ScenarioConfig, sym, lat, transform=None) -> PropagationPlan:
    dt = cfg.get_float("experiment", "dt", default=1.0 / 64.0)
    return PropagationPlan(sym, lat, dt=dt, transform=transform)


# ---- experiment runners ----------------------------------------------------


def run_admit(cfg, rng, out):
    sym = build_symbol(cfg)
    eps = decay_index(cfg.get_list("experiment", "eps", required=True))
    q = cfg.get("experiment", "q")
    report = classify(sym, eps, q=q)
    out.text_lines += report.lines()
    out.summary["memberships"] = {
        name: {"verdict": verdict, "witness": witness}
        for name, (verdict, witness) in report.memberships.items()
    }
    out.summary["rho"] = str(report.profile.rho)
    out.summary["rho_j"] = [str(r) for r in report.profile.rho_j]
    out.summary["tilde_rho_j"] = [str(r) for r in report.profile.tilde_rho_j]
    out.csv("detail_admit.csv", ["set,verdict,witness"] + [
        f"{name},{verdict},\"{witness}\""
        for name, (verdict, witness) in report.memberships.items()
    ])


def run_evolve(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    plan = _plan(cfg, sym, lat)
    wf = build_packet(cfg, lat)
    pot = build_potential(cfg, lat)
    horizon = cfg.get_float("experiment", "horizon", default=1.0)
    dump_every = cfg.get_int("experiment", "dump_every", default=0)
    mode = cfg.get("experiment", "mode", default="static" if not pot.is_zero else "free")
    if mode == "free":
        final = free_evolve(plan, wf, horizon)
    elif mode == "static":
        if dump_every:
            steps = max(1, int(round(horizon / plan.dt)))
            state = wf
            for chunk_start in range(0, steps, dump_every):
                chunk = min(dump_every, steps - chunk_start) * plan.dt
                state = evolve_static(plan, pot, state, chunk, auto_dt=False)
                out.field(f"field_{chunk_start + dump_every:06d}.bin", state)
            final = state
        else:
            final = evolve_static(plan, pot, wf, horizon)
    else:
        _fail("experiment", "mode", f"unknown mode {mode!r}")
    out.summary.update({
        "mode": mode,
        "horizon": horizon,
        "norm_initial": wf.norm(),
        "norm_final": final.norm(),
        "momentum_mean_final": list(final.momentum_mean()),
        "certificate_in_class": pot.certificate.in_class,
    })


def run_decay_fit(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    j = cfg.get_int("experiment", "block", default=1)
    m = build_block_map(sym, lat, j)
    times = cfg.get_floats("experiment", "times") or [2, 4, 8, 16, 32, 64]
    sign = cfg.get("experiment", "sign", default="+")
    eps_j = cfg.get("experiment", "eps_j", required=True)
    cutoff_s = cfg.get_float("experiment", "cutoff_s")
    cutoff = None
    if cutoff_s is not None:
        from .symbol import SmoothCutoff

        cutoff = (SmoothCutoff(), cutoff_s)
    fit = decay_fit(m, eps_j, sign, times, cutoff=cutoff)
    out.summary.update({
        "slope": fit.slope, "target": fit.target, "residual": fit.residual,
        "a": fit.a, "eps_j": fit.eps_j,
    })
    header = "a,d_j,eps_j,s,slope,target,residual"
    out.csv("detail_decay_fit.csv", [header, fit.csv_row()])


def _ensemble_from_config(cfg, lat, rng, count_key="packets") -> list[WaveFunction]:
    count = cfg.get_int("experiment", count_key, default=8)
    base_mom = cfg.get_floats("packet", "momentum") or [0.5] * lat.ndim
    widths = cfg.get_floats("packet", "widths") or [lat.axes[i][1] / 10.0 for i in range(lat.ndim)]
    packets = []
    for i in range(count):
        jitter = 1.0 + 0.25 * (i / max(1, count - 1) - 0.5)
        mom = [m * jitter for m in base_mom]
        packets.append(gaussian_packet(lat, [0.0] * lat.ndim, mom, widths))
    return packets


def run_smooth(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    plan = _plan(cfg, sym, lat)
    eps = cfg.get_floats("experiment", "eps", required=True)
    gamma = cfg.get_float("experiment", "gamma", required=True)
    horizon = cfg.get_float("experiment", "horizon", default=64.0)
    ensemble = _ensemble_from_config(cfg, lat, rng)
    cut_block = cfg.get_int("experiment", "cutoff_block")
    cutoff = None
    if cut_block is not None:
        cutoff = (cut_block, cfg.get_float("experiment", "cutoff_s", default=2.0))
    res = smoothness_integral(plan, eps, gamma, ensemble, horizon, cutoff=cutoff)
    out.summary.update({
        "integral": res.integral, "ratio": res.ratio,
        "ratio_change": res.ratio_change, "converged": res.converged,
    })
    if cutoff is not None:
        out.summary["s_values"] = list(res.s_values)
        out.summary["s_ratios"] = list(res.s_ratios)
        out.summary["s_exponent"] = res.s_exponent


def _cook_summary(out, res: CookResult, scenario: str, sign: str):
    out.summary.update({
        "horizon": res.horizon, "tail": res.tail,
        "isometry_defect": res.isometry_defect, "converged": res.converged,
    })
    if res.intertwining_defect is not None:
        out.summary["intertwining_defect"] = res.intertwining_defect
    if res.increments:
        out.summary["increments"] = list(res.increments)
    out.csv("detail_waveop.csv",
            ["scenario,sign,T,tail,isometry_defect,intertwining_defect",
             res.csv_row(scenario, sign)])


def run_waveop(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    plan = _plan(cfg, sym, lat)
    pot = build_potential(cfg, lat)
    wf = build_packet(cfg, lat)
    sign = cfg.get("experiment", "sign", default="+")
    if cfg.has("envelope"):
        env = build_envelope(cfg)
        horizons = cfg.get_floats("experiment", "horizons") or [8, 16, 32, 64]
        res = timedep_wave_operator(plan, pot, env, wf, sign, horizons)
        _cook_summary(out, res, "waveop-timedep", sign)
        return
    window = _window(cfg)
    if window is not None:
        wf = window_state(plan, wf, window)
    horizon = cfg.get_float("experiment", "horizon", default=16.0)
    tol = cfg.get_float("experiment", "tol", default=0.05)
    res = cook_wave_operator(plan, pot, wf, sign, horizon, tol=tol, window=window)
    if cfg.get("experiment", "intertwine", default="no") == "yes":
        res.intertwining_defect = intertwining_defect(
            plan, pot, wf, sign, horizon,
            tau_shift=cfg.get_float("experiment", "tau", default=1.0), window=window)
    _cook_summary(out, res, "waveop", sign)


def run_invariance(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    name = cfg.get("experiment", "transform", required=True)
    try:
        transform = named_transform(name)
    except KeyError:
        _fail("experiment", "transform", f"unknown transform {name!r}")
    window = _window(cfg)
    if window is None:
        _fail("experiment", "window", "invariance runs need an energy window lo:hi:edge")
    plan_plain = _plan(cfg, sym, lat)
    plan_trans = _plan(cfg, sym, lat, transform=transform)
    pot = build_potential(cfg, lat)
    wf = build_packet(cfg, lat)
    horizon = cfg.get_float("experiment", "horizon", default=16.0)
    defect = invariance_compare(plan_plain, plan_trans, pot, wf, window, horizon)
    out.summary.update({"transform": name, "horizon": horizon, "defect": defect})


def run_monodromy(cfg, rng, out):
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    plan = _plan(cfg, sym, lat)
    pot = build_potential(cfg, lat)
    env = build_envelope(cfg)
    wf = build_packet(cfg, lat)
    periods = [int(p) for p in cfg.get_floats("experiment", "periods")] or [8, 16, 32]
    one = monodromy_apply(plan, pot, env, wf, periods=1)
    unitarity = abs(one.norm() - wf.norm())
    results = []
    for n in sorted(periods):
        freed = free_evolve(plan, wf, float(n))
        results.append(monodromy_apply(plan, pot, env, freed, periods=n, inverse=True))
    increments = [(b - a).norm() for a, b in zip(results, results[1:])]
    out.summary.update({
        "unitarity_defect": unitarity,
        "periods": sorted(periods),
        "increments": increments,
    })


def run_spectrum(cfg, rng, out):
    mode = cfg.get("experiment", "mode", default="window")
    seed = out.seed
    if mode == "accumulation":
        eps = cfg.get_float("experiment", "eps", required=True)
        c = cfg.get_float("experiment", "c", default=5.0)
        delta = cfg.get_float("experiment", "delta", default=0.25)
        ladder = []
        for item in cfg.get_list("experiment", "ladder"):
            n, half = item.split(":")
            ladder.append((int(n), float(half)))
        rows, verdict = accumulation_study(eps, c, ladder or None, delta=delta, seed=seed)
        out.summary.update({"verdict": verdict, "counts": [r[2] for r in rows]})
        out.csv("detail_spectrum.csv", ["eps,c,N,L,count,verdict"] + [
            f"{eps:.12g},{c:.12g},{n},{half:.12g},{count},{verdict}"
            for n, half, count in rows
        ])
        return
    sym = build_symbol(cfg)
    lat = build_lattice(cfg, sym)
    pot = build_potential(cfg, lat)
    lo = cfg.get_float("experiment", "window_lo", default=-1e6)
    hi = cfg.get_float("experiment", "window_hi", default=0.0)
    k_max = cfg.get_int("experiment", "k_max", default=16)
    rep = discrete_spectrum(sym, lat, pot.samples, (lo, hi), k_max=k_max, seed=seed)
    out.summary.update({
        "eigenvalues": list(rep.eigenvalues),
        "max_residual": float(np.max(rep.residuals)) if len(rep.residuals) else 0.0,
        "converged": rep.converged,
    })
    if cfg.get("experiment", "oracle", default="no") == "yes" and lat.ndim == 1:
        oracle = dense_oracle(sym, lat, pot.samples)
        matched = [float(oracle[np.argmin(np.abs(oracle - v))]) for v in rep.eigenvalues]
        out.summary["oracle_eigenvalues"] = matched


_RUNNERS = {
    "admit": run_admit,
    "evolve": run_evolve,
    "decay-fit": run_decay_fit,
    "smooth": run_smooth,
    "waveop": run_waveop,
    "invariance": run_invariance,
    "monodromy": run_monodromy,
    "spectrum": run_spectrum,
}


class _Output:
    def __init__(self, out_dir: Path, seed: int):
        self.dir = out_dir
        self.seed = seed
        self.summary: dict = {}
        self.text_lines: list[str] = []
        self._csvs: list[tuple[str, list[str]]] = []
        self._fields: list[tuple[str, WaveFunction]] = []

    def csv(self, name: str, rows: list[str]):
        self._csvs.append((name, rows))

    def field(self, name: str, wf: WaveFunction):
        self._fields.append((name, wf))

    def write(self, experiment: str, config_text: str):
        self.dir.mkdir(parents=True, exist_ok=True)
        summary = {
            "experiment": experiment,
            "version": __version__,
            "seed": self.seed,
            "tolerance_provenance": "per-module defaults; see README acceptance table",
            "config": config_text,
            "results": round12(self.summary),
        }
        (self.dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
        for name, rows in self._csvs:
            (self.dir / name).write_text("\n".join(rows) + "\n")
        for name, wf in self._fields:
            save_wavefunction(self.dir / name, wf)


def run_scenario(cfg: ScenarioConfig, out_dir, seed: int = 0, quiet: bool = False,
                 expected_kind: str | None = None) -> int:
    kind = cfg.get("experiment", "kind", required=True)
    if expected_kind is not None and kind != expected_kind:
        raise ConfigError(f"[experiment] kind: config says {kind!r}, subcommand expects {expected_kind!r}")
    runner = _RUNNERS.get(kind)
    if runner is None:
        raise ConfigError(f"[experiment] kind: unknown experiment {kind!r}")
    rng = np.random.Generator(np.random.Philox(seed))
    out = _Output(Path(out_dir), seed)
    runner(cfg, rng, out)
    out.write(kind, cfg.canonical_text())
    if not quiet:
        for line in out.text_lines:
            print(line)
        print(f"wrote {out.dir / 'summary.json'}")
    return 0


def _admit_from_flags(args) -> int:
    blocks = []
    for item in args.blocks.split(","):
        dim, expo, kind = item.strip().split(":")
        blocks.append(BlockSpec(int(dim), float(expo), _KIND_ALIASES[kind]))
    sym = make_dispersion(blocks, args.j_minus, args.j_plus)
    eps = decay_index([e.strip() for e in args.eps.split(",")])
    report = classify(sym, eps, q=args.q)
    for line in report.lines():
        print(line)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="anisoscat",
                                     description="spectral scattering experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="scenario config file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=str, default="out")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--quiet", action="store_true")

    for kind in _RUNNERS:
        p = sub.add_parser(kind, parents=[common])
        if kind == "admit":
            p.add_argument("--blocks", type=str, help="dim:exponent:kind,...")
            p.add_argument("--j-minus", type=int, default=None)
            p.add_argument("--j-plus", type=int, default=None)
            p.add_argument("--eps", type=str, help="comma list of rationals")
            p.add_argument("--q", type=str, default=None)

    scen = sub.add_parser("scenario", parents=[common])
    scen.add_argument("file", type=str)

    args = parser.parse_args(argv)
    try:
        if args.command == "admit" and args.config is None:
            if not (args.blocks and args.eps):
                raise ConfigError("admit needs either --config or --blocks/--eps flags")
            if args.j_minus is None or args.j_plus is None:
                raise ConfigError("admit flags need --j-minus and --j-plus")
            return _admit_from_flags(args)
        if args.command == "scenario":
            cfg = ScenarioConfig.from_path(args.file)
            return run_scenario(cfg, args.out, seed=args.seed, quiet=args.quiet)
        if args.config is None:
            raise ConfigError(f"{args.command} needs --config")
        cfg = ScenarioConfig.from_path(args.config)
        return run_scenario(cfg, args.out, seed=args.seed, quiet=args.quiet,
                            expected_kind=args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 3
    except GuardViolation as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
