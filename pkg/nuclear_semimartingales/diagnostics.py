"""
Probes of the good-integrator property and of the pathwise identities of the integral:
stopping, continuity, localization, bilinearity and continuous linear images.

Exact identities are checked case by case against PROBE_TOLERANCE. Convergence probes
can only falsify the good-integrator property, so their verdict is worded as
"consistent with" or "violates".
"""
import logging
from typing import Dict, List

import numpy as np
import pandas as pd
from dessia_common.core import DessiaObject
from dessia_common.decorators import markdown_view

from nuclear_semimartingales.hermite_core import HermiteBasis, TestFunction
from nuclear_semimartingales.paths import CadlagPath, RandomPartition, StoppingTime
from nuclear_semimartingales.integrate_scalar import (CagladScalarIntegrand, CylindricalSemimartingale,
                                                      DerivativeSemimartingale, ElementaryScalarIntegrand,
                                                      LevelCoefficient, StoppedScalarIntegrand,
                                                      StoppedSemimartingale, SumSemimartingale,
                                                      TestFunctionIntegrand, evaluation_times, riemann_scalar)
from nuclear_semimartingales.integrate_vector import (LocalizedIntegrand, TensorIntegrand, localize_integrate,
                                                      vector_integrate)
from nuclear_semimartingales.metrics import IntegrandDictionary, ProcessEnsemble, r_em_report, r_ucp_report

logger = logging.getLogger(__name__)

PROBE_TOLERANCE = 1e-10
CONSISTENT = 'consistent with a good integrator'
VIOLATES = 'violates the good-integrator property'


class ProbeCase(DessiaObject):
    """One exact identity checked on one path."""
    _standalone_in_db = False

    def __init__(self, label: str, deviation: float, tolerance: float = PROBE_TOLERANCE, name: str = ''):
        self.label = label
        self.deviation = float(deviation)
        self.tolerance = tolerance
        self.passed = bool(self.deviation <= tolerance)
        DessiaObject.__init__(self, name=name or label)


class ProbeReport(DessiaObject):
    """
    Outcome of one probe.

    :param probe_name: The probe
    :type probe_name: str

    :param cases: Exact-identity cases with their absolute deviations
    :type cases: List[ProbeCase]

    :param metric_rows: Convergence table rows (index, r_em lower bound, r_ucp, standard error)
    :type metric_rows: List[Dict[str, float]]
    """
    _standalone_in_db = True

    def __init__(self, probe_name: str, cases: List[ProbeCase] = None, metric_rows: List[Dict[str, float]] = None,
                 verdict: str = '', passed: bool = None, name: str = ''):
        self.probe_name = probe_name
        self.cases = cases or []
        self.metric_rows = metric_rows or []
        self.passed = all(case.passed for case in self.cases) if passed is None else passed
        self.verdict = verdict or ('PASS' if self.passed else 'FAIL')
        DessiaObject.__init__(self, name=name or probe_name)

    @property
    def max_deviation(self) -> float:
        return max((case.deviation for case in self.cases), default=0.)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame([{'probe': self.probe_name, 'case': case.label, 'deviation': case.deviation,
                              'tolerance': case.tolerance, 'passed': int(case.passed)} for case in self.cases],
                            columns=['probe', 'case', 'deviation', 'tolerance', 'passed'])

    def metrics_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(self.metric_rows, columns=['probe', 'sequence', 'index', 'r_em_lower_bound',
                                                       'r_ucp', 'standard_error'])

    def summary_line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.probe_name}: {self.verdict}"

    @markdown_view('Probe report')
    def to_markdown(self, *args, **kwargs) -> str:
        lines = [f'# {self.probe_name}', '', f'**{self.verdict}**', '']
        if self.cases:
            failed = [case for case in self.cases if not case.passed]
            lines.append(f'{len(self.cases) - len(failed)} / {len(self.cases)} cases within tolerance, '
                         f'largest deviation {self.max_deviation:.3e}')
            lines.extend(f'- {case.label}: {case.deviation:.3e}' for case in failed)
        if self.metric_rows:
            lines.extend(['', '| sequence | index | r_em lower bound | r_ucp | SE |', '|---|---|---|---|---|'])
            for row in self.metric_rows:
                lines.append(f"| {row['sequence']} | {row['index']} | {row['r_em_lower_bound']:.4e} "
                             f"| {row['r_ucp']:.4e} | {row['standard_error']:.2e} |")
        return '\n'.join(lines)


# Named probe sets.

def probe_test_functions(basis: HermiteBasis) -> Dict[str, TestFunction]:
    return {'e0': basis.unit(0),
            'e1': basis.unit(1),
            'mix': 0.5 * basis.unit(0) - 0.25 * basis.unit(2) + 0.1 * basis.unit(3)}


def probe_stopping_times(horizon: float = 1.) -> List[StoppingTime]:
    return [StoppingTime('deterministic', horizon, name='horizon'),
            StoppingTime('deterministic', 0., name='zero'),
            StoppingTime('deterministic', horizon / 2., name='half'),
            StoppingTime('hitting', 1., name='passage_1')]


def probe_integrands(basis: HermiteBasis, horizon: float = 1.) -> Dict[str, TestFunctionIntegrand]:
    """Elementary integrands on dyadic blocks, plus a caglad level integrand."""
    functions = probe_test_functions(basis)
    blocks = [0., horizon / 4., horizon / 2., horizon]
    constant_blocks = ElementaryScalarIntegrand.from_constants(blocks, [1., -0.5, 0.25], a0=0.5)
    level_blocks = ElementaryScalarIntegrand(LevelCoefficient('clip'), blocks,
                                             [LevelCoefficient('clip', scale=2.) for _ in range(3)])
    return {'blocks_e0': TestFunctionIntegrand([constant_blocks], [functions['e0']]),
            'level_mix': TestFunctionIntegrand([level_blocks, constant_blocks], [functions['mix'], functions['e1']]),
            'caglad_tanh': TestFunctionIntegrand([CagladScalarIntegrand(LevelCoefficient('tanh'))],
                                                 [functions['e1']])}


def shrinking_sequences(basis: HermiteBasis, horizon: float = 1.,
                        length: int = 6) -> Dict[str, List[TestFunctionIntegrand]]:
    """
    Integrand sequences tending to zero: 'scaled' is (1/k) 1_{(0, T]} e_0 and 'window'
    is 1_{(0, T/k]} e_0, for k = 1, 2, 4, ...
    """
    e0 = basis.unit(0)
    ks = [2 ** i for i in range(length)]
    return {'scaled': [TestFunctionIntegrand([ElementaryScalarIntegrand.indicator(0., horizon, 1. / k)], [e0])
                       for k in ks],
            'window': [TestFunctionIntegrand([ElementaryScalarIntegrand.indicator(0., horizon / k)], [e0])
                       for k in ks]}


def _partition(path: CadlagPath, level: int, extra=()) -> RandomPartition:
    partition = RandomPartition.jump_refined(level, path)
    return partition.refined(extra) if len(extra) else partition


# Probes.

def stopping_probe(X: CylindricalSemimartingale, integrands: Dict[str, TestFunctionIntegrand],
                   stopping_times: List[StoppingTime], paths: List[CadlagPath], level: int = 6) -> ProbeReport:
    """(∫H dX)^τ, ∫H 1_{[0,τ]} dX and ∫H dX^τ compared pathwise on partitions containing τ."""
    cases = []
    for index, path in enumerate(paths):
        for stopping in stopping_times:
            tau = stopping.evaluate(path)
            partition = _partition(path, level, [tau])
            times = evaluation_times(path, partition)
            stopped_times = np.minimum(times, tau)
            for label, H in integrands.items():
                integral = riemann_scalar(H, X, path, partition, stopped_times)
                stopped_integrand = TestFunctionIntegrand(
                    [StoppedScalarIntegrand(integrand, stopping) for integrand in H.integrands], H.test_functions)
                via_integrand = riemann_scalar(stopped_integrand, X, path, partition, times)
                via_integrator = riemann_scalar(H, StoppedSemimartingale(X, stopping), path, partition, times)
                deviation = max(np.max(np.abs(integral - via_integrand)), np.max(np.abs(integral - via_integrator)))
                cases.append(ProbeCase(f'path {index} {label} tau={stopping.name}', deviation))
    report = ProbeReport('stopping', cases)
    logger.info(report.summary_line())
    return report


def continuity_probe(X: CylindricalSemimartingale, sequences: Dict[str, List[TestFunctionIntegrand]],
                     paths: List[CadlagPath], level: int = 6, n_max: int = 1,
                     dictionary: IntegrandDictionary = None, threshold: float = 0.1) -> ProbeReport:
    """
    Émery lower bounds and UCP estimates of ∫H_k dX along sequences H_k → 0. A sequence
    passes if both decrease up to twice their standard errors and end below threshold.
    """
    horizon = paths[0].horizon
    dictionary = dictionary or IntegrandDictionary.standard(horizon)
    times = paths[0].grid
    rows, passed = [], True
    for sequence_name, sequence in sequences.items():
        previous = None
        for index, H in enumerate(sequence):
            integrals = ProcessEnsemble(times, [riemann_scalar(H, X, path, RandomPartition.dyadic(level, horizon),
                                                               times)
                                                for path in paths])
            ucp = r_ucp_report(integrals, n_max)
            emery = r_em_report(integrals, dictionary, n_max)
            rows.append({'probe': 'continuity', 'sequence': sequence_name, 'index': index,
                         'r_em_lower_bound': emery.value, 'r_ucp': ucp.value,
                         'standard_error': ucp.standard_error})
            if previous is not None:
                passed &= ucp.value <= previous[0].value + 2. * previous[0].standard_error
                passed &= emery.value <= previous[1].value + 2. * previous[1].standard_error
            previous = (ucp, emery)
        passed &= previous is not None and max(previous[0].value, previous[1].value) < threshold
    report = ProbeReport('continuity', metric_rows=rows, verdict=CONSISTENT if passed else VIOLATES, passed=passed)
    logger.info(report.summary_line())
    return report


def localization_probe(X: CylindricalSemimartingale, functions: Dict[str, TestFunction], levels: List[float],
                       R: TensorIntegrand, paths: List[CadlagPath], level: int = 6) -> ProbeReport:
    """
    ⟨X^{τ_n}, φ⟩ = ⟨X, φ⟩^{τ_n} for first passages τ_n of |z| through levels, and pasted
    integrals of R against direct ones on paths staying below the top level.
    """
    stopping_times = [StoppingTime('hitting', value, name=f'passage_{value:g}') for value in sorted(levels)]
    cases, skipped = [], 0
    for index, path in enumerate(paths):
        times = path.event_times()
        for stopping in stopping_times:
            tau = stopping.evaluate(path)
            stopped = StoppedSemimartingale(X, stopping)
            for label, function in functions.items():
                deviation = np.max(np.abs(stopped.pairing(path, times, function)
                                          - X.pairing(path, np.minimum(times, tau), function)))
                cases.append(ProbeCase(f'path {index} {label} {stopping.name}', deviation))
        if stopping_times[-1].evaluate(path) < path.horizon:
            skipped += 1
            continue
        partition = _partition(path, level)
        pasted = localize_integrate(LocalizedIntegrand(R, stopping_times), X, path, partition)
        direct = vector_integrate(R, X, path, partition.refined([st.evaluate(path) for st in stopping_times]),
                                  pasted.times)
        cases.append(ProbeCase(f'path {index} pasted integral', np.max(np.abs(pasted.coefficients
                                                                              - direct.coefficients))))
    report = ProbeReport('localization', cases)
    report.verdict += f' ({skipped} of {len(paths)} paths reached the top level and were not pasted)'
    logger.info(report.summary_line())
    return report


def linearity_probe(X: CylindricalSemimartingale, Y: CylindricalSemimartingale, R: TensorIntegrand,
                    S: TensorIntegrand, scalars: List[float], paths: List[CadlagPath],
                    level: int = 6) -> ProbeReport:
    """∫(cR + S) dX against c∫R dX + ∫S dX, and ∫R d(X + Y) against ∫R dX + ∫R dY."""
    cases = []
    both = SumSemimartingale(X, Y)
    for index, path in enumerate(paths):
        partition = _partition(path, level)
        times = evaluation_times(path, partition)
        over_x = vector_integrate(R, X, path, partition, times)
        s_over_x = vector_integrate(S, X, path, partition, times)
        for c in scalars:
            combined = vector_integrate(c * R + S, X, path, partition, times)
            cases.append(ProbeCase(f'path {index} integrand c={c:g}',
                                   np.max(np.abs((combined - (c * over_x + s_over_x)).coefficients))))
        summed = vector_integrate(R, both, path, partition, times)
        over_y = vector_integrate(R, Y, path, partition, times)
        cases.append(ProbeCase(f'path {index} integrator sum',
                               np.max(np.abs((summed - (over_x + over_y)).coefficients))))
    report = ProbeReport('linearity', cases)
    logger.info(report.summary_line())
    return report


def image_probe(X: CylindricalSemimartingale, integrands: Dict[str, TestFunctionIntegrand],
                paths: List[CadlagPath], level: int = 6) -> ProbeReport:
    """∫H d(∂X) = ∫(-∂H) dX for the distributional derivative."""
    derivative = DerivativeSemimartingale(X)
    cases = []
    for index, path in enumerate(paths):
        partition = _partition(path, level)
        for label, H in integrands.items():
            image = riemann_scalar(H, derivative, path, partition)
            pulled_back = riemann_scalar(H.mapped(lambda function: -function.differentiate()), X, path, partition)
            cases.append(ProbeCase(f'path {index} {label}', np.max(np.abs(image - pulled_back))))
    report = ProbeReport('image', cases)
    logger.info(report.summary_line())
    return report


def probe_tensor_integrands(basis: HermiteBasis, horizon: float = 1., seed: int = 0):
    """Two random rank-2 tensor integrands R and S sharing the probe integrand blocks."""
    rng = np.random.default_rng(seed)
    functions = list(probe_test_functions(basis).values())
    blocks = [0., horizon / 4., horizon / 2., horizon]

    def draw():
        integrands = [ElementaryScalarIntegrand.from_constants(blocks, rng.uniform(-1., 1., 3).tolist(),
                                                               a0=float(rng.uniform(-1., 1.))),
                      CagladScalarIntegrand(LevelCoefficient('tanh', scale=float(rng.uniform(0.5, 2.))))]
        tests = [functions[rng.integers(len(functions))] for _ in range(2)]
        distributions = [basis.dual_unit(int(j)) * float(rng.normal()) for j in rng.integers(0, 4, size=2)]
        return TensorIntegrand(integrands, tests, distributions, basis=basis)

    return draw(), draw()


def run_probe_suite(X: CylindricalSemimartingale, Y: CylindricalSemimartingale, paths: List[CadlagPath],
                    basis: HermiteBasis, levels: List[float], level: int = 6, n_max: int = 1,
                    threshold: float = 0.1, seed: int = 0) -> List[ProbeReport]:
    """Every probe on the named presets."""
    horizon = paths[0].horizon
    integrands = probe_integrands(basis, horizon)
    R, S = probe_tensor_integrands(basis, horizon, seed)
    scalars = [0., -1., float(np.random.default_rng(seed).uniform(-2., 2.))]
    return [stopping_probe(X, integrands, probe_stopping_times(horizon), paths, level),
            continuity_probe(X, shrinking_sequences(basis, horizon), paths, level, n_max, threshold=threshold),
            localization_probe(X, probe_test_functions(basis), levels, R, paths, level),
            linearity_probe(X, Y, R, S, scalars, paths, level),
            image_probe(X, integrands, paths, level)]
