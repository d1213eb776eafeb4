#!/usr/bin/env python3
"""
qtestgen - QUBO-guided test generation for cyber-physical systems

Runs the pipeline one step at a time (generate, metrics, select, mutate) or
as a whole campaign, and reproduces the embedding and decomposition studies.
"""

import sys
import argparse
import logging
from pathlib import Path
from typing import List

# Add the parent directory to the path so we can import qubo_testgen
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import numpy as np

from qubo_testgen import __version__
from qubo_testgen.config import (CampaignConfig, campaign_config_from_dict, heuristic_list,
                                 load_campaign_config, load_signal_spec, load_weights)
from qubo_testgen.decompose import DecompositionConfig, SolveStats, dump_plans, plan_subproblems, select_points
from qubo_testgen.embed import embedding_study, export_study_csv, growth_fit
from qubo_testgen.errors import ConfigurationError, QTestGenError
from qubo_testgen.experiment import export_sweep_csv, problem_size_sweep, run_campaign, subproblem_sweep
from qubo_testgen.fileio import (load_metrics, load_selections, load_suite, read_document,
                                 save_json, save_metrics, save_mutation_plans, save_selections,
                                 save_suite)
from qubo_testgen.metrics import compute_suite_metrics, export_metrics_csv
from qubo_testgen.mutate import MutationConfig, mutate_suite
from qubo_testgen.qubo import Weights
from qubo_testgen.solvers import AnnealParams, make_sampler
from qubo_testgen.sut import PlantModel, apply_fault, output_spec, simulate
from qubo_testgen.trajectory import DEFAULT_SAMPLE_PERIOD, TestSuite, generate_suite


def parse_range(text: str) -> List[int]:
    """'5..100', '5..100:5' or '5,10,20' as a list of integers"""
    try:
        if '..' in text:
            bounds, _, step = text.partition(':')
            lo, hi = bounds.split('..')
            return list(range(int(lo), int(hi) + 1, int(step) if step else 1))
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigurationError(f"Cannot parse range '{text}'") from None


def _campaign(args) -> CampaignConfig:
    if getattr(args, 'config', None):
        return load_campaign_config(args.config)
    return campaign_config_from_dict({})


def cmd_generate(args) -> None:
    spec = load_signal_spec(args.spec)
    suite = generate_suite(spec, args.size, args.points, rng=args.seed)
    save_suite(suite, args.out)
    print(f"Wrote {len(suite)} cases of {spec.n_samples} samples to {args.out}")


def cmd_metrics(args) -> None:
    cfg = _campaign(args)
    suite = load_suite(args.suite)
    model = cfg.model if args.model is None else PlantModel(args.model)
    implementation = apply_fault(model, cfg.implementation_fault)
    out_spec = output_spec(model, suite.spec)
    expected = [simulate(model, case) for case in suite]
    observed = [simulate(implementation, case) for case in suite]
    series = compute_suite_metrics(suite, observed, expected, out_spec,
                                   args.radius or cfg.diversity_radius)
    save_metrics(series, args.out, output_spec=out_spec)
    if args.csv_dir:
        Path(args.csv_dir).mkdir(parents=True, exist_ok=True)
        for s in series:
            export_metrics_csv(s, Path(args.csv_dir) / f"{s.case_id}.csv", suite.spec.sample_period)
    print(f"Wrote metrics of {len(series)} cases to {args.out}")


def cmd_select(args) -> None:
    series = load_metrics(args.metrics)
    document = read_document(args.metrics, 'metrics')
    period = float((document.get('output_signal') or {}).get('sample_period', DEFAULT_SAMPLE_PERIOD))
    weights = load_weights(args.weights) if args.weights else Weights()
    anneal = AnnealParams(num_reads=args.reads, sweeps=args.sweeps)
    sampler = make_sampler(args.heuristic, seed=args.seed, anneal=anneal,
                           endpoint=args.endpoint, num_reads=args.reads)
    cfg = DecompositionConfig(m=args.m, n=args.n, coverage=args.coverage, seed=args.seed,
                              workers=args.workers)
    stats = SolveStats()
    selections = {}
    plan_dumps = {}
    for i, s in enumerate(series):
        times = np.arange(len(s)) * period
        seed = None if args.seed is None else [args.seed, i]
        selections[s.case_id] = select_points(s, weights, times, sampler, cfg, whole=args.whole,
                                              seed=seed, stats=stats)
        if args.plans and not args.whole:
            plan_dumps[s.case_id] = dump_plans(plan_subproblems(len(s), cfg), args.seed)
    save_selections(selections, args.out, heuristic=args.heuristic,
                    info={'solver_calls': stats.calls, 'weights': weights.to_dict(),
                          'decomposition': cfg.to_dict(), 'whole': args.whole})
    if args.plans:
        save_json(plan_dumps, args.plans)
    total = sum(len(sel.indices) for sel in selections.values())
    print(f"Selected {total} points over {len(selections)} cases ({stats.calls} solver calls)")


def cmd_mutate(args) -> None:
    suite = load_suite(args.suite)
    selections = load_selections(args.selection)
    series = {s.case_id: s for s in load_metrics(args.metrics)}
    missing = [case.id for case in suite if case.id not in selections or case.id not in series]
    if missing:
        raise ConfigurationError(f"No selection or metrics for case(s): {', '.join(missing)}")
    weights = load_weights(args.weights) if args.weights else Weights()
    cfg = MutationConfig(window_radius=args.window_radius, smoothing_radius=args.smoothing_radius,
                         d_min=weights.d_min)
    mutants, plans = mutate_suite(suite, [selections[c.id] for c in suite],
                                  [series[c.id] for c in suite], cfg)
    save_suite(TestSuite(list(suite) + mutants), args.out)
    if args.plans:
        save_mutation_plans(plans, args.plans, notes={m.parent: m.notes for m in mutants})
    print(f"Wrote {len(suite)} seed and {len(mutants)} mutated cases to {args.out}")


def cmd_campaign(args) -> None:
    cfg = _campaign(args)
    overrides = {}
    if args.repeats:
        overrides['repeats'] = args.repeats
    if args.heuristics:
        overrides['heuristics'] = heuristic_list(args.heuristics)
    if args.seed is not None:
        overrides['seed'] = args.seed
    if overrides:
        data = cfg.to_dict()
        data.update(overrides)
        cfg = campaign_config_from_dict(data)
    report = run_campaign(cfg, report_dir=args.out)
    sys.stdout.write(report.render_summary())
    print(f"Report written to {args.out}")


def cmd_embed_study(args) -> None:
    sizes = parse_range(args.sizes)
    if not sizes:
        raise ConfigurationError("No problem sizes given")
    rows = embedding_study(sizes)
    if args.out:
        export_study_csv(rows, args.out)
    print(f"{'size':>6} {'qubits':>8} {'max_chain':>10}")
    for row in rows:
        print(f"{row['size']:>6} {row['physical_qubits']:>8} {row['max_chain']:>10}")
    if len(sizes) >= 3:
        fit = growth_fit(sizes, [row['physical_qubits'] for row in rows])
        print(f"Residual sum of squares: linear {fit['linear']:.6f}, quadratic {fit['quadratic']:.6f}")


def cmd_size_study(args) -> None:
    rows = problem_size_sweep(_campaign(args), parse_range(args.sizes), args.heuristic)
    if args.out:
        export_sweep_csv(rows, args.out)
    for row in rows:
        print(f"n={row['size']:<4} qubits={row['physical_qubits']:<6} pfd={row['pfd']}")


def cmd_subproblem_study(args) -> None:
    rows = subproblem_sweep(_campaign(args), parse_range(args.counts), args.heuristic)
    if args.out:
        export_sweep_csv(rows, args.out)
    for row in rows:
        print(f"m={row['m']:<4} pfd={row['pfd']}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="QUBO-guided test generation for cyber-physical systems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  qtestgen generate --spec pedal.yaml --size 50 --seed 1 --out suite.json
  qtestgen metrics --suite suite.json --model engine_map --out metrics.json
  qtestgen select --metrics metrics.json --heuristic sa --m 8 --n 40 --out selection.json
  qtestgen mutate --suite suite.json --selection selection.json --metrics metrics.json --out mutated.json
  qtestgen campaign --config campaign.yaml --out report/
  qtestgen embed-study --sizes 5..100:5 --out qubits.csv
        """
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Log progress')
    parser.add_argument('--debug', action='store_true', help='Enable debug output')
    parser.add_argument('--version', action='version', version=f'qtestgen {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='command', required=True)
    sub.required = True

    p = sub.add_parser('generate', help='Generate a seed test suite')
    p.add_argument('--spec', required=True, help='Signal spec file (YAML or JSON)')
    p.add_argument('--size', type=int, default=50, help='Number of test cases')
    p.add_argument('--points', type=int, default=10, help='Control points per case')
    p.add_argument('--seed', type=int, help='Random seed')
    p.add_argument('--out', required=True, help='Suite file to write')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('metrics', help='Execute a suite and compute its metrics')
    p.add_argument('--suite', required=True, help='Suite file')
    p.add_argument('--model', choices=['engine_map', 'first_order_tracker'], help='Reference model kind')
    p.add_argument('--config', help='Campaign config supplying model and implementation fault')
    p.add_argument('--radius', type=int, help='Diversity window radius in samples')
    p.add_argument('--csv-dir', help='Also write one CSV table per case here')
    p.add_argument('--out', required=True, help='Metrics file to write')
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser('select', help='Select data points to mutate')
    p.add_argument('--metrics', required=True, help='Metrics file')
    p.add_argument('--heuristic', default='sa', help='exact, sa, evo, random or remote')
    p.add_argument('--m', type=int, default=8, help='Number of windows')
    p.add_argument('--n', type=int, default=40, help='Sub-problem size')
    p.add_argument('--coverage', type=float, default=0.5, help='Fraction of each window to sample')
    p.add_argument('--whole', action='store_true', help='Solve one problem over the whole trajectory')
    p.add_argument('--weights', help='Weights file (YAML or JSON)')
    p.add_argument('--reads', type=int, default=100, help='Reads per sub-problem')
    p.add_argument('--sweeps', type=int, default=1000, help='Annealing sweeps per read')
    p.add_argument('--endpoint', help='Remote sampler URL')
    p.add_argument('--workers', type=int, default=1, help='Sub-problems solved in parallel')
    p.add_argument('--seed', type=int, help='Random seed')
    p.add_argument('--plans', help='Also write the sub-problem plans here')
    p.add_argument('--out', required=True, help='Selection file to write')
    p.set_defaults(func=cmd_select)

    p = sub.add_parser('mutate', help='Mutate selected points and append the mutants')
    p.add_argument('--suite', required=True, help='Suite file')
    p.add_argument('--selection', required=True, help='Selection file')
    p.add_argument('--metrics', required=True, help='Metrics file')
    p.add_argument('--weights', help='Weights file supplying d_min')
    p.add_argument('--window-radius', type=int, default=50, help='Correlation window radius')
    p.add_argument('--smoothing-radius', type=int, default=100, help='Smoothing region radius')
    p.add_argument('--plans', help='Also write the mutation plans here')
    p.add_argument('--out', required=True, help='Mutated suite file to write')
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser('campaign', help='Run the full pipeline against the fault corpus')
    p.add_argument('--config', help='Campaign config (YAML)')
    p.add_argument('--repeats', type=int, help='Override the number of repeats')
    p.add_argument('--heuristics', help='Override heuristics, comma separated')
    p.add_argument('--seed', type=int, help='Override the campaign seed')
    p.add_argument('--out', required=True, help='Report directory')
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser('embed-study', help='Physical qubits of clique embeddings per problem size')
    p.add_argument('--sizes', default='5..100:5', help="Sizes as 'lo..hi[:step]' or a comma list")
    p.add_argument('--out', help='CSV table to write')
    p.set_defaults(func=cmd_embed_study)

    p = sub.add_parser('size-study', help='Fitness and PFD per sub-problem size')
    p.add_argument('--config', help='Campaign config (YAML)')
    p.add_argument('--sizes', default='10..40:10', help='Sub-problem sizes')
    p.add_argument('--heuristic', help='Heuristic to sweep (default: first configured)')
    p.add_argument('--out', help='CSV table to write')
    p.set_defaults(func=cmd_size_study)

    p = sub.add_parser('subproblem-study', help='PFD per number of sub-problems')
    p.add_argument('--config', help='Campaign config (YAML)')
    p.add_argument('--counts', default='1..10', help='Numbers of windows')
    p.add_argument('--heuristic', help='Heuristic to sweep (default: first configured)')
    p.add_argument('--out', help='CSV table to write')
    p.set_defaults(func=cmd_subproblem_study)
    return parser


def main(argv=None):
    """Main function for qtestgen tool"""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    try:
        args.func(args)
    except (QTestGenError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        sys.exit(130)


if __name__ == '__main__':
    main()
