import math

import numpy as np
import pytest

from selbergzeta import congruence as cg
from selbergzeta import geodesics as gd
from selbergzeta.errors import CacheCorruptionError, DiscriminantError, DomainError, RegionError

BOUND = 50


def bounded_matrices(t, bound=BOUND):
    out = []
    for a in range(-bound, bound + 1):
        d = t - a
        if abs(d) > bound:
            continue
        n = a * d - 1  # = b c
        for b in range(-bound, bound + 1):
            if b == 0:
                continue
            if n % b == 0 and abs(n // b) <= bound:
                out.append((a, b, n // b, d))
    return out


def conjugacy_components(t, bound=BOUND):
    """Union-find on bounded trace-t matrices under conjugation by S and T^{+-1}."""
    mats = bounded_matrices(t, bound)
    index = {m: i for i, m in enumerate(mats)}
    parent = list(range(len(mats)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (a, b, c, d) in mats:
        # S g S^-1 = [[d, -c], [-b, a]];  T^e g T^-e = [[a + e c, b + e(d - a) - e^2 c], [c, d - e c]]
        images = [(d, -c, -b, a)]
        for e in (1, -1):
            images.append((a + e * c, b + e * (d - a) - c, c, d - e * c))
        for img in images:
            j = index.get(img)
            if j is not None:
                parent[find(index[(a, b, c, d)])] = find(j)
    comps = {}
    for i, m in enumerate(mats):
        comps.setdefault(find(i), []).append(m)
    return list(comps.values()), index, find


def brute_force_counts(t, bound=BOUND):
    """(all classes, primitive classes) of trace t by bounded conjugacy and matrix powers."""
    comps, index, find = conjugacy_components(t, bound)
    imprimitive = set()
    for t0 in range(3, t):
        for (a, b, c, d) in bounded_matrices(t0, bound):
            A = np.array([[a, b], [c, d]], dtype=object)
            P = A.dot(A)
            while P[0, 0] + P[1, 1] < t:
                P = P.dot(A)
            if P[0, 0] + P[1, 1] == t:
                key = (int(P[0, 0]), int(P[0, 1]), int(P[1, 0]), int(P[1, 1]))
                if key in index:
                    imprimitive.add(find(index[key]))
    roots = {find(index[c[0]]) for c in comps}
    return len(comps), len(roots - imprimitive)


class TestClasses:
    def test_trace_three(self):
        cls = gd.classes_by_trace(3)
        assert len(cls) == 1
        assert cls[0].norm == pytest.approx((7 + 3 * math.sqrt(5)) / 2, rel=1e-14)
        assert cls[0].norm == pytest.approx(6.8541, abs=1e-4)

    @pytest.mark.parametrize("t", [3, 4, 5, 6, 7, 8, 9, 10])
    def test_counts_against_bounded_conjugacy(self, t):
        total, primitive = brute_force_counts(t)
        cls = gd.classes_by_trace(t)
        assert len(cls) == total
        assert sum(c.primitive for c in cls) == primitive

    def test_trace_seven(self):
        cls = gd.classes_by_trace(7)
        assert cls[0].norm == pytest.approx(((7 + math.sqrt(45)) / 2) ** 2, rel=1e-14)
        assert cls[0].norm == pytest.approx(46.9787, abs=1e-4)
        # 7 = 2 T_2(3/2): the class (3, 3, -3) is the square of the trace-3 class
        flags = {c.form: c.primitive for c in cls}
        assert flags == {(1, 5, -5): True, (3, 3, -3): False, (5, 5, -1): True}

    def test_powers_by_matrix_multiplication(self):
        # squares of the trace-4 classes sit at trace 14, the cube of the trace-3 class at 18
        flags14 = {c.form: c.primitive for c in gd.classes_by_trace(14)}
        assert not flags14[(4, 8, -8)] and not flags14[(8, 8, -4)]
        bad18 = [c.form for c in gd.classes_by_trace(18) if not c.primitive]
        assert bad18 == [(8, 8, -8)]
        total, primitive = brute_force_counts(18, bound=60)
        assert sum(c.primitive for c in gd.classes_by_trace(18)) == primitive

    def test_representative_has_trace_and_determinant(self):
        for c in gd.classes_by_trace(11):
            (a, b), (cc, d) = c.rep
            assert a + d == 11 and a * d - b * cc == 1

    def test_invalid_traces(self):
        with pytest.raises(DomainError):
            gd.classes_by_trace(2)

    def test_rho_is_a_permutation_of_reduced_forms(self):
        for t in (9, 12, 25):
            forms = gd.reduced_forms(t)
            images = sorted(gd.rho(gd.rho(f, t), t) for f in forms)
            assert images == forms


class TestSpectrum:
    def test_small(self):
        assert len(gd.compute_length_spectrum(3)) == 1

    def test_bulk_matches_per_trace(self):
        spec = gd.compute_length_spectrum(60)
        per_trace = [c for t in range(3, 61) for c in gd.classes_by_trace(t) if c.primitive]
        assert len(spec) == len(per_trace)
        assert [c.form for c in spec] == [c.form for c in per_trace]
        assert np.all(np.diff(spec.norms) >= 0)

    def test_t_max_ten_against_brute_force(self):
        expected = sum(brute_force_counts(t)[1] for t in range(3, 11))
        assert len(gd.compute_length_spectrum(10)) == expected

    def test_truncate(self):
        spec = gd.compute_length_spectrum(100)
        assert len(spec.truncate(60)) == len(gd.compute_length_spectrum(60))

    def test_lengths(self):
        spec = gd.compute_length_spectrum(20)
        assert np.allclose(spec.lengths, np.log(spec.norms))

    def test_bad_t_max(self):
        with pytest.raises(DomainError):
            gd.compute_length_spectrum(2)


class TestCache:
    def test_round_trip(self, tmp_path):
        spec = gd.compute_length_spectrum(80)
        path = gd.write_cache(spec, tmp_path)
        back = gd.read_cache(path)
        assert np.array_equal(back.forms, spec.forms)
        assert np.array_equal(back.cycle_ids, spec.cycle_ids)

    def test_cache_hit_equals_miss(self, tmp_path):
        a = gd.length_spectrum(90, directory=tmp_path)
        b = gd.length_spectrum(90, directory=tmp_path)
        assert np.array_equal(a.forms, b.forms)

    def test_corruption_detected_and_recomputed(self, tmp_path):
        spec = gd.compute_length_spectrum(40)
        path = gd.write_cache(spec, tmp_path)
        lines = path.read_text().splitlines()
        lines[-1] = lines[-1].replace(" 0 ", " 7 ", 1) + " "
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CacheCorruptionError):
            gd.read_cache(path)
        again = gd.length_spectrum(40, directory=tmp_path)
        assert np.array_equal(again.forms, spec.forms)
        assert gd.read_cache(path).t_max == 40

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv(gd.CACHE_ENV, str(tmp_path / "x"))
        assert gd.cache_dir() == tmp_path / "x"


class TestEuler:
    def test_region(self):
        for s in (1.0, 0.9, 0.5 + 9j):
            with pytest.raises(RegionError):
                gd.euler_zeta(s)

    def test_large_s(self):
        assert abs(gd.euler_zeta(30.0).value - 1) < 1e-9

    def test_tail_bound_is_honest(self):
        a = gd.euler_zeta(3.0, t_max=100)
        b = gd.euler_zeta(3.0, t_max=200)
        assert abs(a.value - b.value) < a.error

    def test_cycle_expansion_identity(self):
        # det(1 - rho(P) x) equals the product over cycles of (1 - x^l)
        table = cg.build_coset_table(2)
        spec = gd.compute_length_spectrum(30)
        x = 0.37 + 0.21j
        for c, lens in zip(spec, gd.induced_cycle_lengths(spec, 2)):
            P = cg.permutation_matrix(table.perm_of_action(c.rep))
            lhs = np.linalg.det(np.eye(table.index) - x * P)
            rhs = np.prod([1 - x ** l for l in lens])
            assert abs(lhs - rhs) < 1e-12

    def test_level_two_as_determinant_product(self):
        # the same product assembled directly from det(1 - rho(P) N^{-s-k})
        s, t_max, k_max = 2.0, 40, 12
        table = cg.build_coset_table(2)
        spec = gd.compute_length_spectrum(t_max)
        logz = 0j
        for c in spec:
            P = cg.permutation_matrix(table.perm_of_action(c.rep))
            for k in range(k_max + 1):
                logz += np.log(np.linalg.det(np.eye(3) - P * c.norm ** (-(s + k))))
        val = gd.euler_zeta(s, m=2, t_max=t_max, k_max=k_max).value
        assert abs(val - np.exp(logz)) < 1e-12

    def test_induced_spectrum(self):
        spec = gd.compute_length_spectrum(50)
        ind = gd.InducedSpectrum(spec, 3)
        # the cycle lengths of each class partition the index
        assert sum(sum(c) for c in gd.induced_cycle_lengths(spec, 3)) == 4 * len(spec)
        assert len(ind) >= len(spec)
