"""Projective loops, degree obstructions, and the invariant-section search."""

import math
from fractions import Fraction

import numpy as np
import pytest

from _util import example_map, example_spec
from cocyclelab import (
    CocycleSpec,
    ExpandingMap,
    Mat2,
    ProjectiveLoop,
    ResolutionError,
    degree_obstruction,
    max_adjacent_gap,
    rotate_loop,
    section_consistency_search,
    section_residual,
    stable_direction_loop,
    twist_degree,
    winding_number,
)

PI = math.pi


def smooth_loop(degree: int, n: int = 256, wobble: float = 0.4,
                seed: int = 0) -> ProjectiveLoop:
    rng = np.random.default_rng([13, seed])
    t = np.arange(n) / n
    s = PI * degree * t
    for f in (1, 2, 3):
        s += wobble / f * float(rng.uniform(-1, 1)) * np.sin(2 * PI * f * t + float(rng.uniform(0, 2 * PI)))
    return ProjectiveLoop(np.mod(s, PI))


def unwrap_degree(loop: ProjectiveLoop) -> int:
    """Independent lift: pi-periodic unwrap via doubled angles."""
    closed = np.append(loop.samples, loop.samples[0])
    lift = np.unwrap(2.0 * closed) / 2.0
    return int(round((lift[-1] - lift[0]) / PI))


# -- loops ----------------------------------------------------------------------

def test_loop_validation():
    with pytest.raises(ValueError):
        ProjectiveLoop(np.zeros(7))  # not a power of two
    with pytest.raises(ValueError):
        ProjectiveLoop(np.zeros(4))  # too short
    with pytest.raises(ValueError):
        ProjectiveLoop(np.zeros((8, 2)))
    with pytest.raises(ValueError):
        ProjectiveLoop(np.array([0.0] * 7 + [math.nan]))
    loop = ProjectiveLoop(np.linspace(-5.0, 9.0, 16))
    assert np.all((0.0 <= loop.samples) & (loop.samples < PI))


def test_loop_value_interpolates_on_grid():
    loop = smooth_loop(2, n=64)
    for j in (0, 1, 31, 63):
        assert loop.value(j / 64) == pytest.approx(loop.samples[j], abs=1e-15)
    assert loop.value(1.0) == pytest.approx(loop.samples[0], abs=1e-15)


def test_loop_value_takes_shorter_arc():
    # adjacent samples 0.1 and pi - 0.1 are 0.2 apart through 0, not 2.9
    # through pi/2; the midpoint must sit at 0, not at pi/2
    loop = ProjectiveLoop(np.tile([0.1, PI - 0.1], 4))
    mid = loop.value(1.0 / 16.0)
    assert min(mid, PI - mid) <= 1e-12


def test_max_adjacent_gap_projective():
    loop = ProjectiveLoop(np.tile([0.1, PI - 0.1], 4))
    assert max_adjacent_gap(loop) == pytest.approx(0.2, abs=1e-12)


# -- winding numbers --------------------------------------------------------------

@pytest.mark.parametrize("degree", [-3, -1, 0, 1, 2, 5])
def test_winding_of_synthetic_loops(degree):
    for seed in (0, 1, 2):
        loop = smooth_loop(degree, seed=seed)
        assert winding_number(loop) == degree
        assert unwrap_degree(loop) == degree


def test_winding_needs_resolution():
    coarse = ProjectiveLoop(np.mod(5 * PI * np.arange(8) / 8, PI))
    with pytest.raises(ResolutionError):
        winding_number(coarse)


def test_rotate_loop_adds_windings():
    a, b = smooth_loop(2, seed=4), smooth_loop(-1, seed=5)
    assert winding_number(rotate_loop(a, b)) == 1
    with pytest.raises(ValueError):
        rotate_loop(a, smooth_loop(1, n=64))


# -- degree of the twist ----------------------------------------------------------

def test_twist_degree_of_example_is_two():
    # one full rotation per circle turn is two half-turns in RP^1; the
    # constant base factor acts by a homeomorphism and cannot change it
    assert twist_degree(example_spec()) == 2


def test_twist_degree_constant_and_winding_scaling():
    assert twist_degree(CocycleSpec(base=Mat2.diagonal(2.0))) == 0
    assert twist_degree(CocycleSpec(base=Mat2.rotation(0.3), winding=-1)) == -2
    assert twist_degree(CocycleSpec(base=Mat2.diagonal(2.0), winding=3), grid_n=8) == 6


def test_twist_degree_refinement_cap():
    spec = CocycleSpec(base=Mat2.diagonal(2.0), winding=3)
    with pytest.raises(ResolutionError):
        twist_degree(spec, grid_n=8, max_grid=16)


# -- integer obstruction ------------------------------------------------------------

def test_degree_equations_exhaustive():
    for k in range(2, 65):
        for d in range(-8, 9):
            rep = degree_obstruction(k, d)
            assert rep.single_section_solvable == (d % (k - 1) == 0)
            assert rep.pair_section_solvable == ((2 * d) % (k - 1) == 0)
            assert rep.obstructed == (not rep.single_section_solvable
                                      and not rep.pair_section_solvable)
            assert rep.single_degree == Fraction(d, k - 1)
            assert rep.pair_degree == Fraction(2 * d, k - 1)


def test_degree_obstruction_cases():
    # k=4, d=2: 2/3 and 4/3 both non-integral, so fully obstructed
    rep = degree_obstruction(4, 2)
    assert rep.obstructed and not rep.single_section_solvable
    # k=8, d=2 (the example): 2/7 and 4/7, obstructed
    assert degree_obstruction(8, twist_degree(example_spec())).obstructed
    # k=2 kills every obstruction: the degree equation is solvable over Z
    rep2 = degree_obstruction(2, 2)
    assert rep2.single_section_solvable and not rep2.obstructed
    # k=3, d=2: single 2/2=1 solvable
    assert not degree_obstruction(3, 2).obstructed
    with pytest.raises(ValueError):
        degree_obstruction(1, 2)
    d = degree_obstruction(4, 2).to_dict()
    assert d["single_degree"] == "2/3" and d["obstructed"] is True


# -- section search -----------------------------------------------------------------

def test_stable_direction_loop_constant_cocycle():
    loop = stable_direction_loop(CocycleSpec(base=Mat2.diagonal(2.0)),
                                 example_map(), grid_n=64, direction_steps=32)
    assert np.allclose(loop.samples, PI / 2, atol=1e-12)


def test_stable_direction_loop_without_gap_is_constant():
    loop = stable_direction_loop(CocycleSpec(base=Mat2.rotation(0.7)),
                                 example_map(), grid_n=64, direction_steps=32)
    assert np.all(loop.samples == 0.0)


def test_search_validation():
    spec, m = example_spec(), example_map()
    with pytest.raises(ValueError):
        section_consistency_search(spec, m, grid_n=100)
    with pytest.raises(ValueError):
        section_consistency_search(spec, m, grid_n=256, n_iterations=0)
    with pytest.raises(ValueError):
        section_consistency_search(spec, m, grid_n=256,
                                   init=ProjectiveLoop(np.zeros(64)))


def test_search_finds_section_of_constant_cocycle():
    """diag(2, 1/2) has the genuine constant sections e1 and e2; e2 repels
    the iteration, so any start converges onto one of them."""
    const = CocycleSpec(base=Mat2.diagonal(2.0))
    for seed in (None, (77, 0), (77, 1)):
        loop, resid = section_consistency_search(
            const, example_map(), grid_n=256, n_iterations=60,
            direction_steps=64, seed=seed)
        assert resid <= 1e-9
        angle = loop.samples[0]
        assert min(angle, PI - angle) <= 1e-9 or abs(angle - PI / 2) <= 1e-9


def test_search_residual_stays_large_on_example():
    """k=8: the degree equations are unsolvable, so no continuous section
    exists and the consistency residual cannot approach zero."""
    spec, m = example_spec(), example_map()
    worst = math.inf
    for seed in (None, (5, 0), (5, 1), (5, 2)):
        _, resid = section_consistency_search(spec, m, grid_n=256,
                                              n_iterations=30,
                                              direction_steps=64, seed=seed)
        worst = min(worst, resid)
    assert worst >= 0.2


def test_search_residual_stays_large_at_k2_too():
    """k=2: the degree equation is solvable, yet the family takes elliptic
    values, so no continuous invariant section exists either; the integer
    test is an obstruction, not a construction."""
    _, resid = section_consistency_search(example_spec(), ExpandingMap(2),
                                          grid_n=256, n_iterations=60,
                                          direction_steps=64)
    assert resid >= 0.2


def test_search_rotation_control():
    # a constant rotation moves every direction by its angle; the spread
    # of candidate directions at any point is exactly that angle
    rot = CocycleSpec(base=Mat2.rotation(0.7))
    loop, resid = section_consistency_search(rot, example_map(), grid_n=256,
                                             n_iterations=30, direction_steps=64)
    assert resid == pytest.approx(0.7, abs=1e-9)
    assert section_residual(rot, example_map(), loop) == resid
