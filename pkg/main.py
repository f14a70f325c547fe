"""
Main entry point for the sub-Finsler geodesics toolkit

Subcommands:
- geodesic: shoot for the extremal joining the identity to a target
- integrate: integrate the normal extremal flow from a multiplier
- isoperimetrix: polar body and isoperimetrix of a planar norm
- glp: randomised linearity experiment
- blowdown: blow-down sequence of a stored trace
- verify-example52: golden example52 report
- dist: left-invariant homogeneous distance

Every run stages its JSON report, CSV and gnuplot script and writes them
together at the end. Exit codes: 0 success, 1 solver or check failure,
2 invalid input, 3 I/O failure.
"""

import argparse
import json
import logging
import logging.config
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config import config
from core.convex_norms import norm_from_descriptor
from core.exceptions import (
    LineInputError, MultiplierError, NotStrictlyConvexError, SubFinslerError, ValidationError
)
from core.heisenberg import curve_header, curve_to_rows, group_point, left_invariant_distance
from core.pontryagin import integrate_extremal, verify_extremal
from models.data_models import (
    Multiplier, RunConfig, ShootingMode, ShootingProblem, Subcommand,
    dict_to_extremal_trace, dict_to_homogeneous_descriptor
)
from models.norm_interfaces import NormOracle
from services.geodesic_bvp import GeodesicBVPService
from services.glp_lab import GLPLabService, blow_down, boundedness_certificate, example52_closed_form, verify_example52
from services.isoperimetrix import IsoperimetrixService, tangent_turning
from utils.file_manager import FileManager, FileManagerError, output_paths, sibling
from utils.report_generator import PlotScriptGenerator

logger = logging.getLogger('subfinsler.cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_IO = 3


class StrictArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises ValidationError instead of exiting"""

    def error(self, message: str):
        raise ValidationError(message, field='arguments')


def parse_vector(text: str, field: str, length: Optional[int] = None) -> np.ndarray:
    try:
        values = np.array([float(item) for item in text.split(',')], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}", field=field) from exc
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"entries must be finite, got {text!r}", field=field)
    if length is not None and values.size != length:
        raise ValidationError(f"expected {length} numbers, got {values.size}", field=field)
    return values


def parse_scales(text: str) -> List[int]:
    try:
        scales = [int(item) for item in text.split(',')]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}", field='ks') from exc
    if not scales or any(k < 1 for k in scales):
        raise ValidationError("blow-down scales must be positive integers", field='ks')
    return scales


def parse_json(text: str, field: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc.msg}", field=field) from exc


def build_parser() -> argparse.ArgumentParser:
    defaults = config.cli_config
    parser = StrictArgumentParser(prog='subfinsler', description="Sub-Finsler geodesics on Heisenberg groups")
    parser.add_argument('--log-level', default=None, choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help="console log level (default: SUBFINSLER_LOG_LEVEL or INFO)")
    parser.add_argument('--log-file', default=None, help="also write a detailed DEBUG log to this file")
    sub = parser.add_subparsers(dest='subcommand', required=True, parser_class=StrictArgumentParser)

    geodesic = sub.add_parser('geodesic', help="shoot for the geodesic from the identity to a target")
    geodesic.add_argument('--norm', required=True, help="norm descriptor JSON")
    geodesic.add_argument('--target', required=True, help="target x1..xn,y1..yn,t")
    mode = geodesic.add_mutually_exclusive_group()
    mode.add_argument('--fixed-T', dest='fixed_T', type=float, default=None, help="fixed final time T")
    mode.add_argument('--unit-speed', action='store_true', help="unit-speed parametrisation (default)")
    geodesic.add_argument('--tol', type=float, default=config.shooting_config['tolerance'],
                          help="endpoint residual tolerance (default: %(default)s)")
    geodesic.add_argument('--steps', type=int, default=config.shooting_config['steps'],
                          help="RK4 steps per shot (default: %(default)s)")
    geodesic.add_argument('--seed', type=int, default=config.seed, help="random-start seed (default: %(default)s)")
    geodesic.add_argument('--out', default=None, help="output JSON path (default: geodesic.json)")

    integrate = sub.add_parser('integrate', help="integrate the normal extremal flow")
    integrate.add_argument('--norm', required=True, help="norm descriptor JSON")
    integrate.add_argument('--k', type=float, required=True, help="vertical costate k")
    integrate.add_argument('--lambda0', required=True, help="initial covector lambda(0), comma-separated")
    integrate.add_argument('--T', type=float, required=True, help="final time")
    integrate.add_argument('--R', type=float, default=1.0, help="speed N*(lambda(0)) (default: %(default)s)")
    integrate.add_argument('--steps', type=int, default=None,
                           help=f"RK4 steps (default: {config.integrator_config['steps_per_unit']} per unit time)")
    integrate.add_argument('--out', default=None, help="output JSON path (default: integrate.json)")

    iso = sub.add_parser('isoperimetrix', help="polar body and isoperimetrix of a planar norm")
    iso.add_argument('--norm', required=True, help="norm descriptor JSON")
    iso.add_argument('--resolution', type=int, default=defaults['resolution'],
                     help="boundary directions (default: %(default)s)")
    iso.add_argument('--out', default=None, help="output CSV or JSON path (default: isoperimetrix.json)")

    glp = sub.add_parser('glp', help="empirical linearity experiment")
    glp.add_argument('--norm', required=True, help="norm descriptor JSON")
    glp.add_argument('--trials', type=int, default=defaults['trials'], help="trials (default: %(default)s)")
    glp.add_argument('--horizon', type=float, default=defaults['horizon'], help="horizon (default: %(default)s)")
    glp.add_argument('--seed', type=int, default=config.seed, help="seed (default: %(default)s)")
    glp.add_argument('--out', default=None, help="output JSON path (default: glp.json)")

    blowdown = sub.add_parser('blowdown', help="blow-down sequence of a stored trace")
    blowdown.add_argument('--trace', required=True, help="JSON written by integrate or geodesic")
    blowdown.add_argument('--ks', default=defaults['blow_down_scales'], help="scales (default: %(default)s)")
    blowdown.add_argument('--norm', default=None, help="norm descriptor JSON; enables residuals and C/k")
    blowdown.add_argument('--out', default=None, help="output JSON path (default: blowdown.json)")

    example = sub.add_parser('verify-example52', help="golden example52 report")
    example.add_argument('--out', default=None, help="output JSON path (default: example52.json)")

    dist = sub.add_parser('dist', help="homogeneous left-invariant distance")
    dist.add_argument('--norm-hom', dest='norm_hom', required=True, help='descriptor JSON, e.g. {"p":2,"a":1}')
    dist.add_argument('--g', required=True, help="first point x..,y..,t")
    dist.add_argument('--h', required=True, help="second point x..,y..,t")
    dist.add_argument('--out', default=None, help="optional output JSON path")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    subcommand = Subcommand(args.subcommand)
    options = {key: value for key, value in sorted(vars(args).items())
               if key not in ('subcommand', 'norm', 'out', 'seed', 'log_level', 'log_file')}
    descriptor = None
    if getattr(args, 'norm', None) is not None:
        # canonical form of a validated descriptor
        descriptor = norm_from_descriptor(parse_json(args.norm, 'norm')).descriptor()
    for name in ('steps', 'resolution', 'trials'):
        value = options.get(name)
        if value is not None and value < 1:
            raise ValidationError(f"{name} must be positive, got {value}", field=name)
    for name in ('T', 'R', 'horizon', 'tol', 'fixed_T'):
        value = options.get(name)
        if value is not None and not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}", field=name)
    return RunConfig(subcommand=subcommand, norm_descriptor=descriptor, options=options,
                     output=args.out, seed=getattr(args, 'seed', config.seed))


class SubFinslerCLI:
    """
    Command-line orchestrator: one handler per subcommand, one writer per run.
    """

    def __init__(self, file_manager: Optional[FileManager] = None,
                 plots: Optional[PlotScriptGenerator] = None):
        self.files = file_manager or FileManager()
        self.plots = plots or PlotScriptGenerator()
        self.handlers: Dict[Subcommand, Callable[[RunConfig], int]] = {
            Subcommand.GEODESIC: self.run_geodesic,
            Subcommand.INTEGRATE: self.run_integrate,
            Subcommand.ISOPERIMETRIX: self.run_isoperimetrix,
            Subcommand.GLP: self.run_glp,
            Subcommand.BLOWDOWN: self.run_blowdown,
            Subcommand.VERIFY_EXAMPLE52: self.run_verify_example52,
            Subcommand.DIST: self.run_dist,
        }

    def _norm(self, run: RunConfig) -> NormOracle:
        return norm_from_descriptor(run.norm_descriptor)

    def _stage_report(self, run: RunConfig, paths: Dict[str, Path], result: Dict[str, Any],
                      with_csv: bool = True, extra_files: Optional[Dict[str, Path]] = None) -> None:
        files = {'csv': paths['csv'].name, 'plot': paths['plot'].name} if with_csv else {}
        files.update({key: path.name for key, path in (extra_files or {}).items()})
        self.files.stage_json(paths['json'], {'subcommand': run.subcommand.value, 'run': run.to_dict(),
                                              'files': files, 'result': result})

    def _stage_curve(self, paths: Dict[str, Path], curve, title: str) -> None:
        self.files.stage_csv(paths['csv'], curve_header(curve.n), curve_to_rows(curve))
        self.files.stage_text(paths['plot'], self.plots.curve_script(paths['csv'].name, curve.n, title=title))

    def run_geodesic(self, run: RunConfig) -> int:
        norm = self._norm(run)
        options = run.options
        target = group_point(parse_vector(options['target'], 'target', norm.dim + 1))
        if options.get('fixed_T') is not None:
            problem = ShootingProblem(norm, target, ShootingMode.FIXED_T, T=options['fixed_T'])
        else:
            problem = ShootingProblem(norm, target, ShootingMode.UNIT_SPEED)
        service = GeodesicBVPService({'steps': options['steps']}, seed=run.seed)
        result = service.shoot(problem, tol=options['tol'])
        trace = result.trace
        report = verify_extremal(norm, trace)
        equivalence = service.equivalence_check(norm, trace.v_samples, result.T, s_grid=trace.s_grid)
        payload = result.to_dict()
        payload['verification'] = report.to_dict()
        payload['equivalence'] = equivalence.to_dict()
        paths = output_paths(run.output, 'geodesic')
        self._stage_report(run, paths, payload)
        self._stage_curve(paths, trace.curve, "geodesic to " + options['target'])
        logger.info("[CLI] geodesic T=%.10g cost=%.10g residual=%.2e", result.T, result.cost, result.residual)
        return EXIT_OK

    def run_integrate(self, run: RunConfig) -> int:
        norm = self._norm(run)
        options = run.options
        try:
            multiplier = Multiplier(parse_vector(options['lambda0'], 'lambda0', norm.dim), options['k'], options['R'])
            multiplier.validate(norm, config.integrator_config['multiplier_tolerance'])
        except MultiplierError as exc:
            raise ValidationError(exc.args[0], field='lambda0') from exc
        trace = integrate_extremal(norm, multiplier, options['T'], options.get('steps'))
        report = verify_extremal(norm, trace)
        payload = {
            'multiplier': multiplier.to_dict(),
            'T': options['T'],
            'steps': int(trace.s_grid.size - 1),
            'endpoint': trace.curve.end.to_dict(),
            'trace': trace.to_dict(),
            'verification': report.to_dict()
        }
        paths = output_paths(run.output, 'integrate')
        self._stage_report(run, paths, payload)
        self._stage_curve(paths, trace.curve, f"extremal k={options['k']!r}")
        logger.info("[CLI] integrated %d steps, verification %s", trace.s_grid.size - 1,
                    'pass' if report.passed else 'fail')
        return EXIT_OK

    def run_isoperimetrix(self, run: RunConfig) -> int:
        norm = self._norm(run)
        resolution = run.options['resolution']
        service = IsoperimetrixService()
        polar = service.polar_body(norm, resolution)
        iso = service.isoperimetrix_curve(norm, resolution)
        count = len(polar.boundary)
        theta = 2.0 * np.pi * np.arange(count) / count
        sphere = norm.unit_sphere_point(np.column_stack([np.cos(theta), np.sin(theta)]))
        closed = np.arange(count + 1) % count
        payload = {
            'resolution': resolution,
            'points': count,
            'polar_convex': polar.is_convex(),
            'polar_symmetric': polar.is_symmetric(),
            'isoperimetrix_convex': iso.is_convex(),
            'bipolar_error': service.bipolar_error(norm, resolution),
            'turning': tangent_turning(iso.boundary)
        }
        paths = output_paths(run.output, 'isoperimetrix')
        bodies = sibling(paths['csv'], '.csv', '_bodies')
        self._stage_report(run, paths, payload, extra_files={'bodies': bodies})
        self.files.stage_csv(paths['csv'], ['x', 'y'], iso.boundary[closed].tolist())
        self.files.stage_csv(bodies, ['polar_x', 'polar_y', 'ball_x', 'ball_y'],
                             np.hstack([polar.boundary[closed], sphere[closed]]).tolist())
        series = [{'x': 1, 'y': 2, 'label': 'isoperimetrix'},
                  {'x': 1, 'y': 2, 'label': 'polar body', 'csv': bodies.name},
                  {'x': 3, 'y': 4, 'label': 'unit sphere', 'csv': bodies.name}]
        self.files.stage_text(paths['plot'], self.plots.body_script(paths['csv'].name, series,
                                                                    title="isoperimetrix"))
        logger.info("[CLI] isoperimetrix with %d boundary points", count)
        return EXIT_OK

    def run_glp(self, run: RunConfig) -> int:
        norm = self._norm(run)
        options = run.options
        report = GLPLabService().glp_empirical(norm, options['trials'], options['horizon'], run.seed)
        rows = [[trial.index, trial.multiplier.k, trial.observed_sup, trial.bound, trial.line_deviation,
                 trial.period, None if trial.bounded is None else int(trial.bounded)] for trial in report.trials]
        paths = output_paths(run.output, 'glp')
        self._stage_report(run, paths, report.to_dict())
        self.files.stage_csv(paths['csv'], ['index', 'k', 'observed_sup', 'bound', 'line_deviation', 'period',
                                            'bounded'], rows)
        series = [{'x': 1, 'y': 3, 'label': 'observed sup'}, {'x': 1, 'y': 4, 'label': 'bound C'}]
        self.files.stage_text(paths['plot'], self.plots.table_script(paths['csv'].name, series, title="GLP trials",
                                                                     xlabel="trial", ylabel="sup |gamma_I|"))
        logger.info("[CLI] GLP experiment %s over %d trials", 'passed' if report.passed else 'failed',
                    len(report.trials))
        return EXIT_OK if report.passed else EXIT_FAILURE

    def run_blowdown(self, run: RunConfig) -> int:
        options = run.options
        data = self.files.read_json(options['trace'])
        if isinstance(data, dict) and 'result' in data:
            data = data['result']
        if isinstance(data, dict) and 'trace' in data:
            data = data['trace']
        try:
            trace = dict_to_extremal_trace(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{options['trace']} does not hold an extremal trace", field='trace') from exc
        norm = self._norm(run) if run.norm_descriptor is not None else None
        report = blow_down(trace, parse_scales(options['ks']), norm=norm)
        certificate, reason = None, None
        if norm is not None:
            try:
                certificate = boundedness_certificate(norm, trace)
            except (LineInputError, NotStrictlyConvexError) as exc:
                reason = str(exc)
        payload = {'blow_down': report.to_dict(),
                   'certificate': certificate.to_dict() if certificate else None,
                   'certificate_unavailable': reason}
        paths = output_paths(run.output, 'blowdown')
        self._stage_report(run, paths, payload)
        self.files.stage_csv(paths['csv'], ['k', 'projection_sup', 'geodesic_residual'],
                             zip(report.k_values, report.projection_sups, report.geodesic_residuals))
        reference = f"{certificate.C!r}/x" if certificate else None
        self.files.stage_text(paths['plot'], self.plots.loglog_script(
            paths['csv'].name, reference=reference, reference_label="C/k"))
        logger.info("[CLI] blow-down over %d scales, collapse rate %s", len(report.k_values), report.collapse_rate)
        return EXIT_OK

    def run_verify_example52(self, run: RunConfig) -> int:
        report = verify_example52()
        curve, _, _ = example52_closed_form(np.linspace(0.0, report['tau'], 2049))
        paths = output_paths(run.output, 'example52')
        self._stage_report(run, paths, report)
        self._stage_curve(paths, curve, "example52 geodesic")
        return EXIT_OK if report['status'] == 'pass' else EXIT_FAILURE

    def run_dist(self, run: RunConfig) -> int:
        options = run.options
        g = parse_vector(options['g'], 'g')
        h = parse_vector(options['h'], 'h', g.size)
        if g.size < 3 or g.size % 2 == 0:
            raise ValidationError(f"points need 2n+1 coordinates, got {g.size}", field='g')
        descriptor = dict_to_homogeneous_descriptor(parse_json(options['norm_hom'], 'norm-hom'), n=(g.size - 1) // 2)
        distance = left_invariant_distance(descriptor, group_point(g), group_point(h))
        print(repr(distance))
        if run.output:
            self._stage_report(run, output_paths(run.output, 'dist'),
                               {'descriptor': descriptor.to_dict(), 'g': g.tolist(), 'h': h.tolist(),
                                'distance': distance}, with_csv=False)
        return EXIT_OK

    def run(self, run: RunConfig) -> int:
        """Execute one validated run and flush its artifacts"""
        logger.debug("[CLI] %s with options %s", run.subcommand.value, run.options)
        try:
            code = self.handlers[run.subcommand](run)
            self.files.flush()
        except BaseException:
            self.files.discard()
            raise
        return code


def configure_logging(level: Optional[str], log_file: Optional[str]) -> None:
    logging_config = config.file_logging_config(Path(log_file)) if log_file else config.logging_config
    if level:
        logging_config['handlers']['console']['level'] = level
        logging_config['root']['level'] = level
    logging.config.dictConfig(logging_config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level, args.log_file)
        run = build_run_config(args)
        return SubFinslerCLI().run(run)
    except ValidationError as e:
        logger.debug(f"Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (FileManagerError, OSError) as e:
        logger.debug(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except SubFinslerError as e:
        logger.debug(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
