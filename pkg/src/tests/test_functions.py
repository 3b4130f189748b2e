import numpy as np
import pytest

from src.core.dyadic import walsh_samples
from src.core.transform import save_binary
from src.errors import DomainError, ShapeError, UsageError
from src.orchestration.functions import adversarial_suite, build_function, random_suite


def test_rect_defaults_round_to_grid():
    f = build_function("rect", (3, 3))
    assert f.samples.sum() == 16
    assert f.samples[1:5, 2:6].all()
    assert f.samples[0].sum() == 0 and f.samples[:, 6:].sum() == 0


def test_rect_params_and_bad_sides():
    f = build_function("rect", (2,), {"lo": "0.25", "hi": "0.75"})
    np.testing.assert_array_equal(f.samples, [0, 1, 1, 0])
    with pytest.raises(DomainError):
        build_function("rect", (2,), {"lo": "0.5", "hi": "0.5"})
    with pytest.raises(UsageError):
        build_function("rect", (2, 2), {"lo": "0.1,0.2,0.3"})


def test_walsh_product_is_tensor_of_walsh_functions():
    f = build_function("walsh", (3, 2), {"index": "5,2"})
    np.testing.assert_array_equal(f.samples, np.outer(walsh_samples(5, 3), walsh_samples(2, 2)))


def test_borderline_has_unit_mass_on_the_corner_cell():
    f = build_function("borderline", (3, 3), {"level": "2"})
    assert np.abs(f.samples).mean() == pytest.approx(1.0)
    assert f.samples[:2, :2].min() == 16 and f.samples[2:].max() == 0
    with pytest.raises(DomainError):
        build_function("borderline", (2, 4), {"level": "3"})


def test_random_step_is_constant_on_coarse_cells_and_seeded():
    f = build_function("random-step", (4,), {"level": "1"}, seed=9)
    assert len(np.unique(f.samples[:8])) == 1 and len(np.unique(f.samples[8:])) == 1
    np.testing.assert_array_equal(f.samples, build_function("random-step", (4,), {"level": "1"}, seed=9).samples)


def test_constant_and_unknown_names():
    assert build_function("constant", (1, 2), {"value": "2.5"}).samples.min() == 2.5
    with pytest.raises(UsageError):
        build_function("spline", (3,))


def test_file_function_checks_resolution(tmp_path):
    path = tmp_path / "f.bin"
    save_binary(build_function("walsh", (3,)), path)
    assert build_function(f"file:{path}", (3,)).samples.tolist() == walsh_samples(3, 3).tolist()
    with pytest.raises(ShapeError):
        build_function(f"file:{path}", (4,))


def test_random_suite_is_reproducible():
    first = random_suite((5,), 6, seed=3)
    second = random_suite((5,), 6, seed=3)
    assert len(first) == 6
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(first[0].samples, random_suite((5,), 1, seed=4)[0].samples)


def test_adversarial_suite_contents():
    suite = adversarial_suite()
    assert len(suite) == 50
    assert all(f.resolution == (8,) for f in suite)
    assert suite[0].samples[0] == 256 and np.abs(suite[0].samples).mean() == 1
    with pytest.raises(DomainError):
        adversarial_suite(7)
