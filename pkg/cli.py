"""
Command line interface.

Subcommands: gen, em, em-search, kmeans, sample, anneal, report, bench.
Every random draw flows from --seed. Exit status: 0 on success, 1 on bad
input or usage, 2 on an internal error.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import click

import data_io
from app import configure_logging, load_settings
from baselines import em_fit, em_search, kmeans_fit
from errors import MixtureInputError
from experiments import run_head_to_head
from gibbs_chain import SWEEP_RULES, AnnealSchedule, new_chain, run_anneal
from mce_controller import MCEConfig, anneal_search, mce_run
from reports import write_reports
from rng_streams import substream
from synthgen import KINDS, GeneratorSpec, generate

logger = logging.getLogger(__name__)


def data_options(command):
    """--data plus the prior range and precision flags shared by every fitting command."""
    @click.option('--data', 'data_path', required=True, type=click.Path(exists=True, dir_okay=False),
                  help='Dataset CSV (header row, one observation per row).')
    @click.option('--mu-range', nargs=2, type=float, default=None,
                  help='Prior range LO HI for every class mean (default: data span +/- 10%).')
    @click.option('--sigma-max', type=float, default=None,
                  help='Upper prior bound on class standard deviations (default: data span).')
    @click.option('--eps', type=float, default=None,
                  help='Measurement precision (default: 1% of the pooled standard deviation).')
    @functools.wraps(command)
    def wrapper(*args, data_path, mu_range, sigma_max, eps, **kwargs):
        dataset = data_io.read_dataset(data_path, range_mu=mu_range, range_sigma=sigma_max, eps=eps)
        return command(*args, dataset=dataset, **kwargs)
    return wrapper


@click.group()
@click.option('--log-level', default=None, help='Logging level (default WARNING or $MMLMIX_LOG_LEVEL).')
def cli(log_level):
    """Minimum message length mixture modelling with a multiple-chain Gibbs sampler."""
    configure_logging(log_level)


@cli.command()
@click.option('--spec', 'kind', type=click.Choice(KINDS), required=True, help='Generator kind.')
@click.option('--per-class', type=int, default=500, show_default=True)
@click.option('--sigma', type=float, default=0.5, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--model', 'model_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Model JSON for --spec custom.')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Output CSV; labels go to <stem>.labels.csv.')
def gen(kind, per_class, sigma, seed, model_path, out):
    """Generate a synthetic dataset and its ground-truth labels."""
    custom = data_io.model_from_dict(data_io.read_json(model_path)) if model_path else None
    generated = generate(GeneratorSpec(kind, sigma, per_class, seed, custom))
    path = data_io.write_dataset(generated.dataset, out)
    data_io.write_labels(generated.labels, data_io.labels_path(path))
    click.echo(f"rows={generated.dataset.n_obs} attrs={generated.dataset.n_attrs} out={path}")


@cli.command()
@data_options
@click.option('--k', type=int, required=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--tol', type=float, default=None, help='Convergence tolerance in nats.')
@click.option('--max-iter', type=int, default=None)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Model JSON output.')
def em(dataset, k, seed, tol, max_iter, out):
    """Fit one mixture by EM."""
    settings = load_settings({'em_tol': tol, 'em_max_iter': max_iter})
    fit = em_fit(dataset, k, seed, settings['em_tol'], settings['em_max_iter'])
    if out:
        data_io.write_json(data_io.model_to_dict(fit.model, dataset), out)
    click.echo(f"k={k} loglik={fit.loglik:.6f} iterations={fit.n_iter} converged={fit.converged}")


@cli.command('em-search')
@data_options
@click.option('--k-min', type=int, default=1, show_default=True)
@click.option('--k-max', type=int, required=True)
@click.option('--budget', type=float, required=True, help='Wall-clock budget in seconds.')
@click.option('--start-k', type=int, multiple=True, help='k values to try first (repeatable).')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Model JSON output.')
def em_search_command(dataset, k_min, k_max, budget, start_k, seed, out):
    """Randomly restarted EM over k, scored by message length."""
    result = em_search(dataset, k_min, k_max, budget, seed, start_ks=list(start_k))
    if out:
        data_io.write_json(data_io.model_to_dict(result.model, dataset), out)
    click.echo(f"k={result.k} total_nits={result.length.total:.6f} fits={result.n_fits}"
               + (" partial=true" if result.partial else ""))


@cli.command()
@data_options
@click.option('--k', type=int, required=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--max-iter', type=int, default=None)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Centroids JSON output.')
def kmeans(dataset, k, seed, max_iter, out):
    """Lloyd K-Means."""
    settings = load_settings({'kmeans_max_iter': max_iter})
    fit = kmeans_fit(dataset, k, seed, settings['kmeans_max_iter'])
    if out:
        data_io.write_json({'k': k, 'distortion': fit.distortion, 'centroids': fit.centroids.tolist(),
                            'labels': fit.assignment.labels.tolist()}, out)
    click.echo(f"k={k} distortion={fit.distortion:.6f} iterations={fit.n_iter}")


@cli.command()
@data_options
@click.option('--k-min', type=int, default=1, show_default=True)
@click.option('--k-max', type=int, required=True)
@click.option('--burn-in', type=int, default=None)
@click.option('--samples', type=int, default=None)
@click.option('--segment', type=int, default=None)
@click.option('--segments', type=int, default=None)
@click.option('--temperature', type=float, default=1.0, show_default=True)
@click.option('--workers', type=int, default=None, help='Threads for burn-in and first sampling.')
@click.option('--rule', type=click.Choice(SWEEP_RULES), default=None, help='Sweep rule (default exact).')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False), default=None, help='Trace JSON-lines output.')
@click.option('--summary', 'summary_path', type=click.Path(dir_okay=False), default=None,
              help='Summary JSON output (default: stdout).')
@click.option('--progress', is_flag=True, help='Show a progress bar.')
def sample(dataset, k_min, k_max, burn_in, samples, segment, segments, temperature, workers,
           rule, seed, trace_path, summary_path, progress):
    """Multiple-chain sampling over k in [k-min, k-max]."""
    settings = load_settings({'burn_in': burn_in, 'samples': samples, 'segment': segment,
                              'segments': segments, 'workers': workers, 'sweep_rule': rule})
    config = MCEConfig.from_settings(settings, seed, temperature)
    result = mce_run(dataset, k_min, k_max, config, settings['segments'], progress=progress)
    if trace_path:
        Path(trace_path).unlink(missing_ok=True)
        data_io.append_trace(result.trace, trace_path)
    summary = {
        'per_k_probability': {str(k): p for k, p in result.probabilities.items()},
        'best': {
            'k': result.best.k,
            'total_nits': result.best.length.total,
            'model': data_io.model_to_dict(result.best.model, dataset),
        },
        'visits': {str(k): v for k, v in result.visits.items()},
    }
    if summary_path:
        data_io.write_json(summary, summary_path)
    else:
        click.echo(json.dumps(summary, indent=2))


@cli.command()
@data_options
@click.option('--k', type=int, default=None, help='Anneal one chain with this k.')
@click.option('--k-min', type=int, default=1, show_default=True)
@click.option('--k-max', type=int, default=None, help='With --budget: draw each run\'s k from [k-min, k-max].')
@click.option('--budget', type=float, default=None, help='Seconds of independent runs with random k.')
@click.option('--t0', type=float, default=None)
@click.option('--cool', type=float, default=None)
@click.option('--iters', 'iters_per_temp', type=int, default=None, help='Sweeps per temperature.')
@click.option('--t-min', type=float, default=None)
@click.option('--rule', type=click.Choice(SWEEP_RULES), default=None, help='Sweep rule (default fixed).')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Best model JSON output.')
@click.option('--progress', is_flag=True)
def anneal(dataset, k, k_min, k_max, budget, t0, cool, iters_per_temp, t_min, rule, seed, out, progress):
    """Simulated annealing: one chain (--k) or repeated runs with random k (--budget)."""
    settings = load_settings({'t0': t0, 'cool': cool, 'iters_per_temp': iters_per_temp, 't_min': t_min,
                              'anneal_rule': rule})
    schedule = AnnealSchedule(settings['t0'], settings['cool'], settings['iters_per_temp'], settings['t_min'])
    if k is not None:
        state = new_chain(dataset, k, substream(seed, "anneal-run-0"), k_max=k_max or k,
                          rule=settings['anneal_rule'])
        best = run_anneal(state, dataset, schedule.t0, schedule.cool, schedule.iters_per_temp,
                          schedule.t_min, progress=progress).best
    elif budget is not None and k_max is not None:
        best = anneal_search(dataset, k_min, k_max, schedule, budget, seed, progress=progress,
                             rule=settings['anneal_rule']).best
    else:
        raise click.UsageError("Give --k, or --budget with --k-max")
    if out:
        data_io.write_json(data_io.model_to_dict(best.model, dataset), out)
    click.echo(f"k={best.k} total_nits={best.length.total:.6f} "
               f"part1_nits={best.length.part1:.6f} part2_nits={best.length.part2:.6f}")


@cli.command()
@click.option('--trace', 'trace_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--bins/--no-bins', default=True, show_default=True, help='Write per-k bin tables.')
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False))
def report(trace_path, bins, out_dir):
    """Plot-ready CSV tables from a trace."""
    trace = data_io.read_trace(trace_path)
    if not trace:
        raise MixtureInputError(f"{trace_path} holds no samples")
    for path in write_reports(trace, out_dir, bins=bins):
        click.echo(str(path))


@cli.command()
@click.option('--seed', 'seeds', type=int, multiple=True, default=(0,), show_default=True)
@click.option('--sigma', type=float, default=0.5, show_default=True)
@click.option('--per-class', type=int, default=500, show_default=True)
@click.option('--k-max', type=int, default=12, show_default=True)
@click.option('--budget', type=float, default=120.0, show_default=True, help='Seconds per search.')
@click.option('--out', type=click.Path(dir_okay=False), default=None)
def bench(seeds, sigma, per_class, k_max, budget, out):
    """Equal-budget EM search against annealed sampling on six-Gaussian data."""
    summaries = run_head_to_head(seeds, {'sigma': sigma, 'per_class': per_class,
                                         'k_max': k_max, 'budget_seconds': budget})
    if out:
        data_io.write_json({'runs': summaries}, out)
    for summary in summaries:
        click.echo(json.dumps(summary))


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and map failures to exit codes."""
    try:
        result = cli.main(args=argv, prog_name='mmlmix', standalone_mode=False)
    except click.exceptions.Abort:
        click.echo('Aborted.', err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except (MixtureInputError, FileNotFoundError) as e:
        click.echo(f"Error: {e}", err=True)
        return 1
    except Exception:
        logger.exception("Internal error")
        return 2
    return result if isinstance(result, int) else 0


if __name__ == '__main__':
    sys.exit(main())
