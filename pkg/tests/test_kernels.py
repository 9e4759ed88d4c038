"""Compiled polynomial-evaluation kernels: numba vs numpy parity."""
import os
import subprocess
import sys

import numpy as np
import pytest

from affine_cf.kernels import (
    USING_NUMBA,
    _eval_numpy,
    atom_vector,
    compile_series,
    evaluate_compiled,
)
from affine_cf.symalg import SymPoly, d_series


@pytest.fixture(scope="module")
def compiled():
    return compile_series(d_series(1, 8)[1:])


def random_values(cs, n, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((n, cs.n_atoms))
            + 1j * rng.standard_normal((n, cs.n_atoms)))


class TestCompile:
    def test_shapes(self, compiled):
        assert compiled.n_polys == 8
        assert compiled.term_off.size == 9
        assert compiled.factor_off[-1] == compiled.atom_idx.size

    def test_rejects_constant_terms(self):
        with pytest.raises(ValueError):
            compile_series([SymPoly.constant(1)])


class TestParity:
    def test_matches_symbolic_eval(self, compiled):
        polys = d_series(1, 8)[1:]
        values = random_values(compiled, 5)
        out = evaluate_compiled(compiled, values)
        for i in range(values.shape[0]):
            table = dict(zip(compiled.atoms, values[i]))
            for p, poly in enumerate(polys):
                assert abs(out[i, p] - poly.eval(table)) <= 1e-10

    @pytest.mark.skipif(not USING_NUMBA, reason="numba backend disabled")
    def test_numba_equals_numpy(self, compiled):
        values = random_values(compiled, 200, seed=1)
        via_numpy = _eval_numpy(compiled.coeffs, compiled.term_off,
                                compiled.atom_idx, compiled.atom_pow,
                                compiled.factor_off, values)
        via_dispatch = evaluate_compiled(compiled, values)
        assert np.max(np.abs(via_numpy - via_dispatch)) <= 1e-10

    def test_single_vector_shape(self, compiled):
        values = random_values(compiled, 1)[0]
        out = evaluate_compiled(compiled, values)
        assert out.shape == (compiled.n_polys,)

    def test_wrong_width_rejected(self, compiled):
        with pytest.raises(ValueError):
            evaluate_compiled(compiled, np.zeros(compiled.n_atoms + 1))

    def test_atom_vector_ordering(self, compiled):
        table = {a: complex(i) for i, a in enumerate(compiled.atoms)}
        vec = atom_vector(compiled, table)
        assert np.allclose(vec, np.arange(compiled.n_atoms))


class TestFallbackEnv:
    def test_no_numba_env_gives_same_cf(self):
        code = (
            "from affine_cf.kernels import USING_NUMBA\n"
            "from affine_cf.series_eval import eval_local\n"
            "from affine_cf.symbols import AffineModel\n"
            "m = AffineModel.from_arrays(a0=[[0.4]], b0=[0.2])\n"
            "v = eval_local(m, [0.1], [1.3], 0.5, 14).value\n"
            "print(USING_NUMBA, repr(v))\n"
        )
        env = dict(os.environ, AFFINE_CF_NO_NUMBA="1")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        flag, value = out.stdout.split(maxsplit=1)
        assert flag == "False"
        from affine_cf.series_eval import eval_local
        from affine_cf.symbols import AffineModel
        m = AffineModel.from_arrays(a0=[[0.4]], b0=[0.2])
        here = eval_local(m, [0.1], [1.3], 0.5, 14).value
        assert abs(complex(eval(value)) - here) <= 1e-12
