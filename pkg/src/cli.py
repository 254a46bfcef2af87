#!/usr/bin/env python3
"""
Command-line front end

Every leaf command prints one RunReport (YAML, or JSON with --json) on
standard output and returns the exit code of the error it hit, if any:
0 success, 2 infeasible or degenerate data, 3 invalid input, 4 solver failure.
"""

import functools
import logging
import sys

import click
import numpy as np
from dotenv import load_dotenv

from src.config import Config
from src.entropy import (ClassicalDistribution, kl_divergence, quantum_kullback, shannon_entropy,
                         von_neumann_entropy)
from src.errors import DegeneratePrior, EstimationError, InputFileError
from src.linalg_core import fidelity, frobenius_distance
from src.logger import setup_logger
from src.oscillator import (PhotonDistribution, coherent_density, coherent_mke_mean,
                            estimate_displacement_direct, estimate_displacement_mke,
                            estimate_weak_hamiltonian_fock, fock_mke_mean,
                            reconstruct_from_photon_distribution)
from src.quantum_mke import (DistributionConstraint, MeanConstraint, mke_from_distribution,
                             mke_multi_mean, mke_single_mean, quantum_trajectory)
from src.qubit import (BlochVector, SpinDirection, bloch_to_density, qubit_lambda, qubit_mke_mean,
                       qubit_weak_hamiltonian_multi, qubit_weak_hamiltonian_single)
from src.report import RunReport
from src.simulator import evolve_unitary, exact_distribution, exact_mean, first_order_state, sample_outcomes
from src.state_io import (matrix_to_pairs, read_basis, read_constraints, read_density, read_observable,
                          read_probabilities, write_state)

logger = logging.getLogger(__name__)

USAGE_EXIT_CODE = 3


def _parse_numbers(text, name, count=None):
    try:
        values = [float(part) for part in text.split(',')]
    except ValueError as e:
        raise InputFileError(f"{name} must be comma-separated numbers, got {text!r}") from e
    if count is not None and len(values) not in (count if isinstance(count, tuple) else (count,)):
        raise InputFileError(f"{name} needs {count} components, got {len(values)}", option=name)
    return values


def _parse_alpha(text):
    parts = _parse_numbers(text, '--alpha', count=(1, 2))
    return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)


def report_command(name):
    """
    Wrap a leaf command so that it fills a RunReport and returns its exit code

    The wrapped function receives the report as its first argument after the
    config and writes results into ``report.outputs``.
    """
    def decorator(func):
        @click.option('--json', 'as_json', is_flag=True, help='Emit the report as JSON')
        @click.pass_obj
        @functools.wraps(func)
        def wrapper(config, as_json, **params):
            report = RunReport(name, params)
            try:
                func(config, report, **params)
            except EstimationError as e:
                logger.debug("%s failed: %s", name, e.message)
                report.set_error(e)
            click.echo(report.render(as_json=as_json))
            return report.exit_code
        return wrapper
    return decorator


def _result_outputs(report, result, tau=None):
    report.outputs.update({
        'posterior': matrix_to_pairs(result.posterior.matrix),
        'lambdas': result.lambdas,
        'partition': result.partition,
        'relative_entropy': result.relative_entropy,
        'residual': result.residual,
        'residuals': result.residuals,
    })
    if tau is not None:
        report.outputs['fidelity_with_prior'] = fidelity(result.posterior, tau)
    report.diagnostics['iterations'] = result.iterations


def _save(path, op, label):
    if path:
        write_state(path, op, label=label)


save_option = click.option('--save', type=click.Path(dir_okay=False), help='Write the resulting state to FILE')
lenient_option = click.option('--lenient', is_flag=True,
                              help='Skip unsolvable equations and degenerate blocks instead of failing')


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='YAML file with numerical defaults')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
                                               case_sensitive=False), help='Set logging level')
@click.option('--log-file', type=click.Path(dir_okay=False), help='Also log to FILE')
@click.pass_context
def cli(ctx, config_path, log_level, log_file):
    """Minimum Kullback entropy estimation of quantum states and weak processes"""
    load_dotenv()
    config = Config(config_path=config_path, log_level=log_level.upper() if log_level else None,
                    log_file=log_file)
    setup_logger('src', config.log_file, config.log_level)
    ctx.obj = config


# Estimation from a prior state file

@cli.group()
def estimate():
    """Estimate a state from a prior and measured data"""


@estimate.command('mean')
@click.option('--prior', required=True, type=click.Path(dir_okay=False), help='Prior state file')
@click.option('--observable', required=True, type=click.Path(dir_okay=False), help='Observable file')
@click.option('--mean', required=True, type=float, help='Measured mean value')
@click.option('--tol', type=float, help='Constraint tolerance')
@click.option('--check-trajectory', is_flag=True,
              help='Integrate the multiplier trajectory to the solved lambda and report its distance')
@save_option
@report_command('estimate mean')
def estimate_mean(config, report, prior, observable, mean, tol, check_trajectory, save):
    """Estimate from one mean value"""
    report.add_input_file('prior', prior)
    report.add_input_file('observable', observable)
    tau = read_density(prior)
    constraint = MeanConstraint(read_observable(observable), mean)
    result = mke_single_mean(tau, constraint, tol=tol or config.tolerance)
    _result_outputs(report, result, tau)
    if check_trajectory:
        trajectory = quantum_trajectory(tau, constraint.observable, float(result.lambdas[0]),
                                        step=config.trajectory_step)
        report.diagnostics['trajectory'] = {
            'steps': trajectory.steps,
            'max_trace_drift': trajectory.max_trace_drift,
            'distance': frobenius_distance(trajectory.state, result.posterior),
        }
    _save(save, result.posterior, 'mKE posterior')


@estimate.command('multi')
@click.option('--prior', required=True, type=click.Path(dir_okay=False), help='Prior state file')
@click.option('--constraints', required=True, type=click.Path(dir_okay=False), help='Constraint list file')
@click.option('--tol', type=float, help='Constraint tolerance')
@click.option('--max-iter', type=int, help='Newton iterations per run')
@save_option
@report_command('estimate multi')
def estimate_multi(config, report, prior, constraints, tol, max_iter, save):
    """Estimate from several mean values"""
    report.add_input_file('prior', prior)
    report.add_input_file('constraints', constraints)
    tau = read_density(prior)
    mean_constraints, files = read_constraints(constraints)
    for index, path in enumerate(files):
        report.add_input_file(f'observable[{index}]', path)
    result = mke_multi_mean(
        tau, mean_constraints,
        tol=tol or config.tolerance,
        max_iter=max_iter or config.max_iter,
        restarts=config.restarts,
        seed=config.restart_seed,
    )
    _result_outputs(report, result, tau)
    _save(save, result.posterior, 'mKE posterior')


@estimate.command('dist')
@click.option('--prior', required=True, type=click.Path(dir_okay=False), help='Prior state file')
@click.option('--probs', required=True, type=click.Path(dir_okay=False), help='Measured probabilities')
@click.option('--basis', type=click.Path(dir_okay=False), help='Measurement basis (default: computational)')
@save_option
@report_command('estimate dist')
def estimate_dist(config, report, prior, probs, basis, save):
    """Estimate from a full measured distribution"""
    report.add_input_file('prior', prior)
    report.add_input_file('probs', probs)
    tau = read_density(prior)
    probabilities = read_probabilities(probs)
    if basis:
        report.add_input_file('basis', basis)
        constraint = DistributionConstraint(read_basis(basis), probabilities)
    else:
        constraint = DistributionConstraint(np.eye(tau.dim), probabilities)
    result = mke_from_distribution(tau, constraint)
    _result_outputs(report, result, tau)
    _save(save, result.posterior, 'mKE posterior')


# Qubit closed forms

@cli.group()
def qubit():
    """Closed-form qubit estimates"""


@qubit.command('estimate')
@click.option('--prior-bloch', required=True, help='Prior Bloch vector x,y,z')
@click.option('--dir', 'direction', required=True, help='Spin direction nx,ny,nz')
@click.option('--mean', required=True, type=float, help='Measured spin mean')
@save_option
@report_command('qubit estimate')
def qubit_estimate(config, report, prior_bloch, direction, mean, save):
    """Bloch vector estimate from one spin measurement"""
    tau = BlochVector(_parse_numbers(prior_bloch, '--prior-bloch', 3))
    n = SpinDirection.normalized(_parse_numbers(direction, '--dir', 3))
    v = qubit_mke_mean(tau, n, mean)
    rho = bloch_to_density(v)
    report.outputs.update({
        'bloch': v.v,
        'lambda': qubit_lambda(tau, n, mean),
        'posterior': matrix_to_pairs(rho.matrix),
    })
    _save(save, rho, 'qubit mKE posterior')


@qubit.command('hamiltonian')
@click.option('--prior-bloch', required=True, help='Prior Bloch vector x,y,z')
@click.option('--dir', 'directions', required=True, multiple=True, help='Spin direction (repeatable)')
@click.option('--mean', 'means', required=True, type=float, multiple=True, help='Spin mean (one per --dir)')
@click.option('--time', 'time_', type=float, help='Evolution time; reports h instead of h t')
@report_command('qubit hamiltonian')
def qubit_hamiltonian(config, report, prior_bloch, directions, means, time_):
    """Weak Hamiltonian from spin means after a short evolution"""
    if len(directions) != len(means):
        raise InputFileError(f"Got {len(directions)} --dir but {len(means)} --mean values")
    tau = BlochVector(_parse_numbers(prior_bloch, '--prior-bloch', 3))
    data = [(SpinDirection.normalized(_parse_numbers(d, '--dir', 3)), m) for d, m in zip(directions, means)]
    report.outputs['identity_component'] = 'indeterminate'
    if len(data) == 1:
        result = qubit_weak_hamiltonian_single(tau, *data[0])
        report.outputs.update({'h_eff': result.h_eff, 'direction': result.direction, 'kappa': result.kappa})
        if time_ is not None:
            report.outputs['h'] = result.per_unit_time(time_)
    else:
        h_eff = qubit_weak_hamiltonian_multi(tau, data)
        report.outputs['h_eff'] = h_eff
        if time_ is not None:
            report.outputs['h'] = qubit_weak_hamiltonian_multi(tau, data, t=time_)


# Oscillator estimates

@cli.group()
def oscillator():
    """Truncated Fock space estimates"""


@oscillator.command('mean')
@click.option('--alpha', required=True, help='Prior coherent amplitude RE[,IM]')
@click.option('--nbar', required=True, type=float, help='Measured mean photon number')
@click.option('--cutoff', type=int, help='Fock cutoff for the numerical cross-check')
@click.option('--tol', type=float, help='Constraint tolerance')
@report_command('oscillator mean')
def oscillator_mean(config, report, alpha, nbar, cutoff, tol):
    """Coherent prior with a mean photon number constraint"""
    amplitude = _parse_alpha(alpha)
    closed = coherent_mke_mean(amplitude, nbar)
    report.outputs['closed_form'] = {
        'beta': closed.beta,
        'lambda': closed.lam,
        'partition': closed.partition,
        'normalized_partition': closed.normalized_partition,
    }
    cutoff = cutoff or config.cutoff
    numerical = fock_mke_mean(amplitude, nbar, cutoff, tol=tol or config.tolerance)
    report.outputs['numerical'] = {
        'cutoff': cutoff,
        'lambda': float(numerical.lambdas[0]),
        'partition': numerical.partition,
        'residual': numerical.residual,
        'fidelity_with_closed_form': fidelity(numerical.posterior, coherent_density(closed.beta, cutoff)),
    }
    report.diagnostics['iterations'] = numerical.iterations


def _photon_distribution(path, tail_tolerance):
    return PhotonDistribution(read_probabilities(path), tail_tolerance=tail_tolerance)


@oscillator.command('displacement')
@click.option('--alpha', required=True, type=float, help='Real positive prior amplitude')
@click.option('--probs', required=True, type=click.Path(dir_okay=False), help='Measured photon distribution')
@click.option('--method', type=click.Choice(['mke', 'direct']), default='mke', show_default=True)
@click.option('--cutoff', type=int, help='Fock cutoff (default: length of the distribution)')
@click.option('--tail-tolerance', type=float, default=1e-10, show_default=True,
              help='Allowed missing probability mass beyond the cutoff')
@lenient_option
@report_command('oscillator displacement')
def oscillator_displacement(config, report, alpha, probs, method, cutoff, tail_tolerance, lenient):
    """Weak displacement of a coherent prior from photon statistics"""
    report.add_input_file('probs', probs)
    p = _photon_distribution(probs, tail_tolerance)
    estimator = estimate_displacement_mke if method == 'mke' else estimate_displacement_direct
    result = estimator(alpha, p, cutoff, strict=not lenient)
    report.outputs.update({
        'beta': result.beta,
        'spread': result.spread,
        'method': result.method,
        'count': len(result.determinations),
        'determinations': [{'n': n, 'm': m, 'beta': beta} for n, m, beta in result.determinations],
    })


@oscillator.command('hamiltonian')
@click.option('--prior', required=True, type=click.Path(dir_okay=False), help='Prior state file (Fock basis)')
@click.option('--probs', required=True, type=click.Path(dir_okay=False), help='Measured photon distribution')
@click.option('--time', 'time_', required=True, type=float, help='Evolution time')
@click.option('--cutoff', type=int, help='Fock cutoff (default: prior dimension)')
@click.option('--tail-tolerance', type=float, default=1e-10, show_default=True,
              help='Allowed missing probability mass beyond the cutoff')
@lenient_option
@report_command('oscillator hamiltonian')
def oscillator_hamiltonian(config, report, prior, probs, time_, cutoff, tail_tolerance, lenient):
    """Weak Hamiltonian from the photon distribution after a short evolution"""
    report.add_input_file('prior', prior)
    report.add_input_file('probs', probs)
    tau = read_density(prior)
    p = _photon_distribution(probs, tail_tolerance)
    try:
        hamiltonian = estimate_weak_hamiltonian_fock(tau, p, time_, cutoff, strict=not lenient)
    except DegeneratePrior as e:
        report.outputs['hamiltonian'] = matrix_to_pairs(e.estimate.matrix)
        raise
    report.outputs['hamiltonian'] = matrix_to_pairs(hamiltonian.matrix)


@oscillator.command('reconstruct')
@click.option('--phase', required=True, type=float, help='Phase of the coherent prior')
@click.option('--probs', required=True, type=click.Path(dir_okay=False), help='Measured photon distribution')
@click.option('--tail-tolerance', type=float, default=1e-10, show_default=True,
              help='Allowed missing probability mass beyond the cutoff')
@save_option
@report_command('oscillator reconstruct')
def oscillator_reconstruct(config, report, phase, probs, tail_tolerance, save):
    """Pure state estimate for any coherent prior with the given phase"""
    report.add_input_file('probs', probs)
    rho = reconstruct_from_photon_distribution(phase, _photon_distribution(probs, tail_tolerance))
    report.outputs['posterior'] = matrix_to_pairs(rho.matrix)
    _save(save, rho, 'reconstructed state')


# Simulation

@cli.group()
def simulate():
    """Generate exact or sampled measurement data"""


@simulate.command('mean')
@click.option('--state', required=True, type=click.Path(dir_okay=False), help='State file')
@click.option('--observable', required=True, type=click.Path(dir_okay=False), help='Observable file')
@report_command('simulate mean')
def simulate_mean(config, report, state, observable):
    """Exact mean value Tr[rho A]"""
    report.add_input_file('state', state)
    report.add_input_file('observable', observable)
    report.outputs['mean'] = exact_mean(read_density(state), read_observable(observable))


@simulate.command('dist')
@click.option('--state', required=True, type=click.Path(dir_okay=False), help='State file')
@click.option('--basis', type=click.Path(dir_okay=False), help='Measurement basis (default: computational)')
@report_command('simulate dist')
def simulate_dist(config, report, state, basis):
    """Exact outcome distribution"""
    report.add_input_file('state', state)
    rho = read_density(state)
    if basis:
        report.add_input_file('basis', basis)
    vectors = read_basis(basis) if basis else np.eye(rho.dim)
    report.outputs['probabilities'] = exact_distribution(rho, vectors).probabilities


@simulate.command('sample')
@click.option('--probs', required=True, type=click.Path(dir_okay=False), help='Outcome probabilities')
@click.option('--shots', required=True, type=int, help='Number of shots')
@click.option('--seed', required=True, type=int, help='Generator seed')
@report_command('simulate sample')
def simulate_sample(config, report, probs, shots, seed):
    """Seeded multinomial sample"""
    report.add_input_file('probs', probs)
    sample = sample_outcomes(ClassicalDistribution(read_probabilities(probs)), shots, seed)
    report.outputs.update({
        'counts': sample.counts,
        'shots': sample.shots,
        'seed': sample.seed,
        'frequencies': sample.frequencies(),
    })


@simulate.command('evolve')
@click.option('--state', required=True, type=click.Path(dir_okay=False), help='State file')
@click.option('--hamiltonian', required=True, type=click.Path(dir_okay=False), help='Hamiltonian file')
@click.option('--time', 'time_', required=True, type=float, help='Evolution time')
@click.option('--first-order', is_flag=True, help='Use the first-order expansion tau + i t [tau, H]')
@save_option
@report_command('simulate evolve')
def simulate_evolve(config, report, state, hamiltonian, time_, first_order, save):
    """Unitary evolution of a state"""
    report.add_input_file('state', state)
    report.add_input_file('hamiltonian', hamiltonian)
    tau = read_density(state)
    H = read_observable(hamiltonian)
    evolved = first_order_state(tau, H, time_) if first_order else evolve_unitary(tau, H, time_)
    report.outputs['state'] = matrix_to_pairs(evolved.matrix)
    _save(save, evolved, 'first order' if first_order else 'evolved')


# Entropies

@cli.group()
def entropy():
    """Entropies and divergences"""


@entropy.command('kl')
@click.option('--a', 'a_path', required=True, type=click.Path(dir_okay=False), help='Probability file p')
@click.option('--b', 'b_path', required=True, type=click.Path(dir_okay=False), help='Probability file q')
@report_command('entropy kl')
def entropy_kl(config, report, a_path, b_path):
    """Kullback-Leibler divergence K(p|q)"""
    report.add_input_file('a', a_path)
    report.add_input_file('b', b_path)
    report.outputs['divergence'] = kl_divergence(read_probabilities(a_path), read_probabilities(b_path))


@entropy.command('quantum')
@click.option('--a', 'a_path', required=True, type=click.Path(dir_okay=False), help='State file rho')
@click.option('--b', 'b_path', required=True, type=click.Path(dir_okay=False), help='State file tau')
@report_command('entropy quantum')
def entropy_quantum(config, report, a_path, b_path):
    """Quantum relative entropy K(rho|tau)"""
    report.add_input_file('a', a_path)
    report.add_input_file('b', b_path)
    report.outputs['divergence'] = quantum_kullback(read_density(a_path), read_density(b_path))


@entropy.command('shannon')
@click.option('--a', 'a_path', required=True, type=click.Path(dir_okay=False), help='Probability file')
@report_command('entropy shannon')
def entropy_shannon(config, report, a_path):
    """Shannon entropy H(p)"""
    report.add_input_file('a', a_path)
    report.outputs['entropy'] = shannon_entropy(read_probabilities(a_path))


@entropy.command('vn')
@click.option('--a', 'a_path', required=True, type=click.Path(dir_okay=False), help='State file')
@report_command('entropy vn')
def entropy_vn(config, report, a_path):
    """Von Neumann entropy H(rho)"""
    report.add_input_file('a', a_path)
    report.outputs['entropy'] = von_neumann_entropy(read_density(a_path))


def _error_report(command, error):
    report = RunReport(command)
    report.set_error(error)
    click.echo(report.render())
    return report.exit_code


def run(argv=None):
    """
    Run one command and return its exit code

    Args:
        argv (list, optional): arguments without the program name; sys.argv when None

    Returns:
        int: process exit code
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        result = cli.main(args=argv, prog_name='mke', standalone_mode=False)
    except click.exceptions.ClickException as e:
        e.show()
        error = InputFileError(e.format_message(), usage=True)
        return _error_report(' '.join(argv), error) if isinstance(e, click.UsageError) else USAGE_EXIT_CODE
    except click.exceptions.Abort:
        click.echo("Aborted", err=True)
        return 1
    except EstimationError as e:
        # Raised before any command ran, e.g. by a bad --config file
        click.echo(f"Error: {e.message}", err=True)
        return _error_report(' '.join(argv), e)
    return result if isinstance(result, int) else 0


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
