#  Bell Bound
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

"""Command line front end.

    python cli.py bound --regime local --dim 2 --restarts 8 --seed 42
    python cli.py expect scenarios/optimal_chsh.ini
    python cli.py check scenarios/shared_nonlocal.ini
    python cli.py simulate --model quantum --shots 1000000 --angles 0,45,22.5,-22.5 --seed 7
    python cli.py scan --model all --step 1 --shots 100000 --output scan.csv
    python cli.py report --experimental 2.70

Angles are given in degrees. Reports go to stdout, CSV to ``--output``
(``scan`` writes CSV to stdout when no path is given), log lines to stderr.
"""

import configparser
import math
import sys
from argparse import ArgumentParser, ArgumentTypeError
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import pandas as pd

import bounds
import data
import linalg_core
import scenario as sc
import simulator as sim
from config import apply_config, build_parser, get_config
from tools import format_report, parse_degrees, plog, resolve_seed, write_csv

SUBCOMMANDS = ('bound', 'expect', 'check', 'simulate', 'scan', 'report')
REGIMES = {r.value: r for r in sc.Regime}
BOUND_COLUMNS = ['regime', 'dimension', 'restarts', 'achieved', 'target', 'converged', 'seed']

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    config_path: Optional[str] = None
    scenario_path: Optional[str] = None
    regime: Optional[sc.Regime] = None
    dimension: Optional[int] = None
    restarts: Optional[int] = None
    shots: Optional[int] = None
    angles: Optional[sim.AngleSettings] = None
    seed: Optional[int] = None
    output_path: Optional[str] = None
    model: Optional[str] = None
    step: Optional[float] = None  # radians
    experimental: Optional[float] = None
    value_range: Tuple[float, float] = sc.DEFAULT_RANGE
    tol_herm: Optional[float] = None
    tol_commutator: Optional[float] = None
    solver: Optional[str] = None
    workers: Optional[int] = None

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise ArgumentTypeError(f"must be positive, got {value}")
    return value

def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ArgumentTypeError(f"invalid number {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise ArgumentTypeError(f"must be positive, got {text}")
    return value

def seed_value(text: str) -> int:
    try:
        return resolve_seed(text)
    except ValueError as e:
        raise ArgumentTypeError(str(e))

def angle_settings(text: str) -> sim.AngleSettings:
    try:
        return sim.AngleSettings(*parse_degrees(text))
    except ValueError as e:
        raise ArgumentTypeError(str(e))

def value_range(text: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(','))
        return sc.check_value_range((lo, hi))
    except ValueError as e:
        raise ArgumentTypeError(f"expected LO,HI: {e}")

def build_cli() -> ArgumentParser:
    parser = ArgumentParser(prog='cli.py', description='Bell operator bounds and CHSH coincidence simulations.',
                            parents=[build_parser()])
    commands = parser.add_subparsers(dest='subcommand', required=True, metavar='{' + ','.join(SUBCOMMANDS) + '}')

    common = ArgumentParser(add_help=False)
    common.add_argument('--seed', type=seed_value, help='unsigned 64-bit seed (default: $BELLBOUND_SEED, then SEED)')
    common.add_argument('--output', dest='output_path', metavar='PATH', help='write CSV to PATH')
    common.add_argument('--tol-herm', type=positive_float, help='Hermiticity tolerance (default: TOL_HERM)')
    common.add_argument('--tol-commutator', type=positive_float,
                        help='commutator-is-zero tolerance (default: TOL_COMMUTATOR)')
    common.add_argument('--solver', choices=linalg_core.SOLVERS, help='eigensolver (default: SOLVER)')

    optimizer = ArgumentParser(add_help=False)
    optimizer.add_argument('--dim', dest='dimension', type=positive_int, help='site dimension (default: DIMENSION)')
    optimizer.add_argument('--restarts', type=positive_int,
                           help='random restarts (default: RESTARTS_LOCAL / RESTARTS_NONLOCAL)')
    optimizer.add_argument('--workers', type=positive_int, help='restart processes (default: WORKERS)')
    optimizer.add_argument('--value-range', type=value_range, default=sc.DEFAULT_RANGE,
                           help='observable spectrum interval LO,HI (default: -1,1)')

    bound = commands.add_parser('bound', parents=[common, optimizer], help='maximize the Bell value of a regime')
    bound.add_argument('--regime', type=str.lower, choices=list(REGIMES), required=True)

    for name, text in (('expect', 'evaluate a scenario file'), ('check', 'classify a scenario file')):
        p = commands.add_parser(name, parents=[common], help=text)
        p.add_argument('scenario_path', metavar='SCENARIO')

    shots = ArgumentParser(add_help=False)
    shots.add_argument('--shots', type=positive_int, help='emitted pairs per setting pair (default: SHOTS)')

    simulate = commands.add_parser('simulate', parents=[common, shots], help='simulate one CHSH experiment')
    simulate.add_argument('--model', choices=sim.MODEL_NAMES, default='quantum')
    simulate.add_argument('--angles', type=angle_settings,
                          help='alpha1,alpha2,beta1,beta2 in degrees (default: 0,45,22.5,-22.5)')

    scan = commands.add_parser('scan', parents=[common, shots], help='S(phi) for (0, 2 phi, phi, -phi)')
    scan.add_argument('--model', choices=sim.MODEL_NAMES + ('all',), default='all')
    scan.add_argument('--step', type=positive_float, default=1.0, help='phi step in degrees, at most 22.5')

    report = commands.add_parser('report', parents=[common, optimizer], help='all regime bounds in one table')
    report.add_argument('--experimental', type=float, help='measured S to compare against each bound')
    return parser

def parse_args(argv: Sequence[str]) -> RunConfig:
    """Raises SystemExit(2) with the offending flag named on a usage error."""
    parser = build_cli()
    args = parser.parse_args(list(argv))
    step = getattr(args, 'step', None)
    if step is not None and step > 22.5:
        parser.error(f"argument --step: must be at most 22.5 degrees, got {step}")
    return RunConfig(
        subcommand=args.subcommand,
        config_path=args.config,
        scenario_path=getattr(args, 'scenario_path', None),
        regime=REGIMES[args.regime] if getattr(args, 'regime', None) else None,
        dimension=getattr(args, 'dimension', None),
        restarts=getattr(args, 'restarts', None),
        shots=getattr(args, 'shots', None),
        angles=getattr(args, 'angles', None),
        seed=args.seed,
        output_path=args.output_path,
        model=getattr(args, 'model', None),
        step=math.radians(step) if step is not None else None,
        experimental=getattr(args, 'experimental', None),
        value_range=getattr(args, 'value_range', sc.DEFAULT_RANGE),
        tol_herm=args.tol_herm,
        tol_commutator=args.tol_commutator,
        solver=args.solver,
        workers=getattr(args, 'workers', None),
    )

def _optimizer_config(cfg: RunConfig, section, regime: sc.Regime, seed: int) -> bounds.OptimizerConfig:
    key = 'RESTARTS_NONLOCAL' if regime is sc.Regime.Nonlocal else 'RESTARTS_LOCAL'
    return bounds.OptimizerConfig(
        dimension=cfg.dimension or section.getint('DIMENSION'),
        restarts=cfg.restarts or section.getint(key),
        max_iterations=section.getint('MAX_ITERATIONS'),
        step_size=section.getfloat('STEP_SIZE'),
        convergence_eps=section.getfloat('CONVERGENCE_EPS'),
        master_seed=seed,
        value_range=cfg.value_range,
        gradient=section.get('GRADIENT'),
        gradient_step=section.getfloat('GRADIENT_STEP'),
        workers=cfg.workers or section.getint('WORKERS'),
        progress=section.getboolean('PROGRESS'),
    )

def _detector(section) -> sim.Detector:
    return sim.Detector(section.getfloat('EFFICIENCY_A'), section.getfloat('EFFICIENCY_B'),
                        section.getfloat('DARK_COUNT'))

def _bound(cfg: RunConfig, section, seed: int):
    if cfg.regime is sc.Regime.Classical:
        result = bounds.classical_max(cfg.value_range)
        dimension, restarts, seed = 1, 1, 0
    else:
        opt = _optimizer_config(cfg, section, cfg.regime, seed)
        run = bounds.local_max if cfg.regime is sc.Regime.LocalHiddenVariable else bounds.nonlocal_max
        result = run(opt)
        dimension, restarts = opt.dimension, opt.restarts
    print(format_report([
        ('regime', cfg.regime.name),
        ('achieved', result.best_value),
        ('target', result.target),
        ('reached', result.reached_target),
        ('converged', result.converged),
        ('naive bound', bounds.naive_bound()),
    ]))
    if cfg.output_path:
        write_csv(pd.DataFrame([{'regime': cfg.regime.name, 'dimension': dimension, 'restarts': restarts,
                                 'achieved': result.best_value, 'target': result.target,
                                 'converged': result.converged, 'seed': seed}], columns=BOUND_COLUMNS),
                  cfg.output_path)

def _expect(cfg: RunConfig):
    s, state = data.load_scenario(cfg.scenario_path)
    ev = sc.evaluate(s, state)
    print(format_report([
        ('scenario', cfg.scenario_path),
        ('embedding', s.embedding.name),
        ('expectation', ev.expectation),
        ('magnitude bound', ev.magnitude),
        ('gap', ev.gap),
        ('regime', ev.regime.regime.name),
        ('regime bound', ev.regime.expected_bound),
        ('swap delta', ev.swap_delta),
    ]))

def _check(cfg: RunConfig):
    s, state = data.load_scenario(cfg.scenario_path)
    tol = linalg_core.tolerances().commutator
    regime = sc.classify_regime(s, tol)
    rows = [
        ('scenario', cfg.scenario_path),
        ('embedding', s.embedding.name),
        ('dimension', s.dim),
        ('regime', regime.regime.name),
        ('witness', ' '.join(pair for pair, norm in regime.witness if norm > tol) or '-'),
        ('regime bound', regime.expected_bound),
    ]
    if state is not None:
        ev = sc.evaluate(s, state)
        rows += [('expectation', ev.expectation), ('swap delta', ev.swap_delta)]
    print(format_report(rows))

def _simulate(cfg: RunConfig, section, seed: int):
    settings = cfg.angles or sim.optimal_angles()
    stats = sim.simulate(cfg.model, settings, cfg.shots or section.getint('SHOTS'), seed,
                         _detector(section), section.getint('SHOT_BLOCK'))
    estimate = sim.chsh_estimate(stats)
    sim.log_estimate(stats, estimate)
    print(format_report([('model', stats.model), ('S', estimate.S), ('sigma', estimate.sigma)]
                        + [('E' + label, estimate.correlations[label]) for label in sim.PAIR_LABELS]))
    for _, row in sim.stats_to_frame(stats).iterrows():
        plog(f"pair {row['pair']}: {row['coincidences']}/{row['emitted']} coincidences, "
             f"transmission A {row['transmission_a']:.6f} B {row['transmission_b']:.6f}")
    if cfg.output_path:
        write_csv(sim.estimate_to_frame(stats, estimate), cfg.output_path)

def _scan(cfg: RunConfig, section, seed: int):
    frame = sim.angle_scan(cfg.model, cfg.step if cfg.step is not None else math.radians(1.0),
                           cfg.shots or section.getint('SHOTS'), seed, _detector(section),
                           section.getint('SHOT_BLOCK'))
    write_csv(frame, cfg.output_path)

def _report(cfg: RunConfig, section, seed: int):
    configs = {regime: _optimizer_config(cfg, section, regime, seed)
               for regime in (sc.Regime.LocalHiddenVariable, sc.Regime.Nonlocal)}
    frame = bounds.regime_report(configs, cfg.value_range, cfg.experimental)
    print(frame.drop(columns=['error']).round(6).to_string(index=False))
    if cfg.output_path:
        write_csv(frame, cfg.output_path)

def run(cfg: RunConfig) -> int:
    try:
        config = apply_config(get_config(cfg.config_path))
        overrides = {k: v for k, v in (('herm', cfg.tol_herm), ('commutator', cfg.tol_commutator),
                                       ('solver', cfg.solver)) if v is not None}
        if overrides:
            linalg_core.configure_tolerances(**overrides)
        section = config['CONFIG']
        seed = cfg.seed if cfg.seed is not None else resolve_seed(None, section.get('SEED'))

        if cfg.subcommand == 'bound':
            _bound(cfg, section, seed)
        elif cfg.subcommand == 'expect':
            _expect(cfg)
        elif cfg.subcommand == 'check':
            _check(cfg)
        elif cfg.subcommand == 'simulate':
            _simulate(cfg, section, seed)
        elif cfg.subcommand == 'scan':
            _scan(cfg, section, seed)
        elif cfg.subcommand == 'report':
            _report(cfg, section, seed)
        else:
            plog(f'unknown subcommand {cfg.subcommand!r}')
            return EXIT_USAGE
    except OSError as e:
        plog(f'error: {e}')
        return EXIT_ERROR
    except (ValueError, ArithmeticError, configparser.Error) as e:
        plog(f'error: {e}')
        return EXIT_ERROR
    return EXIT_OK

def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    return run(cfg)

if __name__ == '__main__':
    sys.exit(main())
