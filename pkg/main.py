import json
import sys

import click

from config_helper import DEFAULT_SEED, DEFAULT_WORKERS, LOG_DIR, LOG_LEVEL, VERSION, load_config_file
from diskanalysis import MODES, DiskScenario, optimize_bypass, pure_profile, saving_percent
from errors import CbctError
from gainmodels import (
    ClusterGeometry,
    PhyParams,
    cb_gain_bound,
    cb_gain_monte_carlo,
    ct_gain_closed_form,
    ct_gain_exact,
    ct_gain_monte_carlo,
)
from harness import (
    ExperimentConfig,
    generate_topology,
    run_compare,
    run_disk,
    run_gain,
    run_snapshot,
    summarize_compare,
)
from log_helper import setup_logging
from routing import (
    CostParams,
    TrafficSpec,
    build_links,
    load_topology,
    save_topology,
    simulate_dynamic,
    solve_lifetime_lp,
)


class CbctGroup(click.Group):
    """Turns library errors into a one-line diagnostic and exit status 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except CbctError as e:
            click.echo(f"❌ {e}", err=True)
            ctx.exit(1)


def phy_options(f):
    options = [
        click.option('--power-dbm', default=10.0, show_default=True, help='Transmit power per node (dBm)'),
        click.option('--noise-dbm', default=-70.0, show_default=True, help='Noise power (dBm)'),
        click.option('--gamma0-db', default=10.0, show_default=True, help='Minimal link SNR (dB)'),
        click.option('--alpha', default=4.0, show_default=True, help='Path loss exponent'),
        click.option('--wavelength', default=0.125, show_default=True, help='Carrier wavelength (m)'),
        click.option('--packet-length', default=100, show_default=True, help='Packet length L (symbols)'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def make_phy(power_dbm, noise_dbm, gamma0_db, alpha, wavelength, packet_length):
    return PhyParams.from_db(power_dbm=power_dbm, noise_dbm=noise_dbm, gamma0_db=gamma0_db,
                             alpha=alpha, wavelength=wavelength, packet_length=packet_length)


def emit(ctx, text):
    """Write to --out when given, stdout otherwise."""
    out = ctx.obj["out"]
    if out:
        with open(out, 'a') as f:
            f.write(text)
        click.echo(f"✅ Wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


def int_list(value):
    try:
        return tuple(int(v) for v in str(value).split(',') if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'")


@click.group(cls=CbctGroup)
@click.version_option(VERSION)
@click.option('--seed', default=DEFAULT_SEED, show_default=True, help='Seed for every random draw')
@click.option('--out', type=click.Path(dir_okay=False), default=None, help='Write results here instead of stdout')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='JSON file with per-subcommand defaults')
@click.option('--log-level', default=LOG_LEVEL, show_default=True, help='DEBUG, INFO, WARNING or ERROR')
@click.option('--workers', default=DEFAULT_WORKERS, show_default=True, help='Parallel workers for MC and sweeps')
@click.pass_context
def cli(ctx, seed, out, config_path, log_level, workers):
    """CB/CT energy gains, disk lifetime analysis and cooperative routing."""
    setup_logging(log_level, LOG_DIR)
    if config_path:
        ctx.default_map = load_config_file(config_path)
    if out:
        # every subcommand appends
        open(out, 'w').close()
    ctx.obj = {"seed": seed, "out": out, "workers": workers}


@cli.command()
@click.argument('kind', type=click.Choice(['cb', 'ct']))
@click.option('--n', 'n', default=10, show_default=True, help='Cluster size N')
@click.option('--radius', default=50.0, show_default=True, help='Cluster radius R (m)')
@click.option('--dist', default=1000.0, show_default=True, help='Distance A to the destination (m)')
@click.option('--trials', default=10_000, show_default=True, help='Monte Carlo placements')
@click.option('--mode', type=click.Choice(['closed', 'mc', 'exact']), default='closed', show_default=True)
@click.option('--sweep', is_flag=True, help='Sweep R = 10..100 m and compare closed form with Monte Carlo')
@click.option('--seed', 'local_seed', default=None, type=int, help='Overrides the global --seed')
@phy_options
@click.pass_context
def gain(ctx, kind, n, radius, dist, trials, mode, sweep, local_seed, **phy_kw):
    """Average energy gain D_av of one CB or CT cluster."""
    phy = make_phy(**phy_kw)
    seed = ctx.obj["seed"] if local_seed is None else local_seed
    workers = ctx.obj["workers"]

    if sweep:
        config = ExperimentConfig(kind=f"gain-{kind}", phy=phy, seed=seed, workers=workers,
                                  cluster_size=n, distance=dist, trials=trials)
        emit(ctx, run_gain(config).to_csv())
        return

    geom = ClusterGeometry(N=n, R=radius, A=dist)
    if mode == 'mc':
        estimator = ct_gain_monte_carlo if kind == 'ct' else cb_gain_monte_carlo
        estimate = estimator(geom, phy, trials, seed, workers)
    elif mode == 'exact':
        if kind != 'ct':
            raise click.BadParameter("exact mode is only available for ct", param_hint='--mode')
        estimate = ct_gain_exact(geom, phy)
    else:
        estimate = ct_gain_closed_form(geom, phy) if kind == 'ct' else cb_gain_bound(geom, phy)

    emit(ctx, "mode,N,R,A,value,stderr\n"
              f"{estimate.mode.value},{geom.N},{geom.R:.10g},{geom.A:.10g},"
              f"{estimate.value:.10g},{estimate.stderr:.10g}\n")


@cli.command()
@click.option('--b0', default=2.0, show_default=True, help='Disk radius B0 (m, or multiples of A0 with --a0 1)')
@click.option('--a0', default=None, type=float, help='Single-hop range A0 (m); derived from the link budget if omitted')
@click.option('--grid', default=100, show_default=True, help='Number of rings G')
@click.option('--mode', type=click.Choice(MODES), default='ideal', show_default=True)
@click.option('--pure', is_flag=True, help='Emit the pure CB/CT curve (P_r = 1 everywhere)')
@click.option('--table', is_flag=True, help='Emit the lifetime saving table for B0/A0 = 2..10')
@click.option('--curves', is_flag=True, help='Emit forwarding, pure and joint curves for B0/A0 = 2..10')
@phy_options
@click.pass_context
def disk(ctx, b0, a0, grid, mode, pure, table, curves, **phy_kw):
    """Per-ring transmissions in a disk network with a central sink."""
    phy = make_phy(**phy_kw)
    if table or curves:
        config = ExperimentConfig(kind="disk", phy=phy, seed=ctx.obj["seed"], workers=ctx.obj["workers"],
                                  a0=1.0 if a0 is None else a0, grid_count=grid, mode=mode)
        curve_table, summary = run_disk(config)
        if curves:
            emit(ctx, curve_table.to_csv())
        if table:
            emit(ctx, summary.to_csv())
        return

    scenario = DiskScenario(B0=b0, A0=a0, grid_count=grid, mode=mode, phy=phy)
    profile = pure_profile(scenario) if pure else optimize_bypass(scenario)
    text = profile.to_frame().to_csv(index=False, float_format="%.10g", lineterminator="\n")
    text += "\nkappa,max_njoint,max_npf,saving_percent\n"
    text += f"{profile.kappa:.10g},{profile.max_njoint:.10g},{profile.max_npf:.10g},{saving_percent(profile):.10g}\n"
    emit(ctx, text)


@cli.command()
@click.option('--topology', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--coop/--no-coop', default=True, show_default=True, help='Allow cooperative links')
@click.option('--all-algorithms', is_flag=True,
              help='Emit a CSV of every algorithm\'s lifetime instead of the flows')
@click.option('--packet-energy', default=0.01, show_default=True, help='Packet energy of the dynamic heuristic')
@phy_options
@click.pass_context
def lp(ctx, topology, coop, all_algorithms, packet_energy, **phy_kw):
    """Max-min lifetime flows as JSON."""
    nodes = load_topology(topology)
    phy = make_phy(**phy_kw)
    if all_algorithms:
        config = ExperimentConfig(kind="snapshot", phy=phy, seed=ctx.obj["seed"], workers=ctx.obj["workers"],
                                  packet_energy=packet_energy)
        emit(ctx, run_snapshot(nodes, config).to_csv())
        return

    links = build_links(nodes, phy)
    solution = solve_lifetime_lp(nodes, links, with_coop=coop)
    click.echo(f"✅ {'Cooperative' if coop else 'Direct'} LP: T = {solution.T:.6f} ({solution.status})", err=True)
    emit(ctx, json.dumps(solution.to_json(), indent=2) + "\n")


@cli.command()
@click.option('--topology', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--beta1', default=2.0, show_default=True)
@click.option('--beta2', default=2.0, show_default=True)
@click.option('--seed', 'local_seed', default=None, type=int, help='Overrides the global --seed')
@click.option('--traffic', type=click.Choice(['fixed', 'poisson']), default='fixed', show_default=True)
@click.option('--packet-energy', default=1.0, show_default=True, help='Energy per packet transmission')
@phy_options
@click.pass_context
def simulate(ctx, topology, beta1, beta2, local_seed, traffic, packet_energy, **phy_kw):
    """Dynamic-cost routing until the first node cannot forward."""
    nodes = load_topology(topology)
    links = build_links(nodes, make_phy(**phy_kw))
    seed = ctx.obj["seed"] if local_seed is None else local_seed
    result = simulate_dynamic(nodes, links, CostParams(beta1, beta2),
                              TrafficSpec(kind=traffic, packet_energy=packet_energy), seed=seed)
    emit(ctx, "lifetime,rounds,completed_rounds,delivered\n"
              f"{result.lifetime:.10g},{result.rounds:.10g},{result.completed_rounds},{result.delivered}\n")


@cli.command()
@click.option('--field', 'field_size', default=100.0, show_default=True, help='Side of the square field (m)')
@click.option('--nodes', 'n_nodes', default='10,15,20,25,30', show_default=True, help='Comma-separated user counts')
@click.option('--instances', default=50, show_default=True, help='Random instances per user count')
@click.option('--dynamic/--no-dynamic', default=False, show_default=True, help='Also run the dynamic-cost heuristic')
@click.option('--packet-energy', default=0.01, show_default=True)
@click.option('--summary', is_flag=True, help='Emit per-count means instead of per-instance rows')
@phy_options
@click.pass_context
def compare(ctx, field_size, n_nodes, instances, dynamic, packet_energy, summary, **phy_kw):
    """Shortest path vs direct-link LP vs cooperative LP on random networks."""
    config = ExperimentConfig(kind="compare", phy=make_phy(**phy_kw), seed=ctx.obj["seed"],
                              workers=ctx.obj["workers"], field_size=field_size, n_nodes=int_list(n_nodes),
                              n_instances=instances, with_dynamic=dynamic, packet_energy=packet_energy)
    table = run_compare(config)
    if summary:
        table = summarize_compare(table)
    emit(ctx, table.to_csv())


@cli.command()
@click.option('--n', 'n', default=20, show_default=True, help='Nodes including the sink')
@click.option('--field', 'field_size', default=100.0, show_default=True, help='Side of the square field (m)')
@click.option('--output', type=click.Path(dir_okay=False), required=True)
@click.pass_context
def topology(ctx, n, field_size, output):
    """Write a random topology (node 1 is the sink) as JSON."""
    nodes = generate_topology(n, field_size, ctx.obj["seed"])
    save_topology(nodes, output)
    click.echo(f"✅ Saved {n} nodes to {output}", err=True)


if __name__ == '__main__':
    sys.exit(cli())
