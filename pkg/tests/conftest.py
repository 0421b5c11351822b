import numpy as np
import pytest
import torch

from semcom.codec import SemanticCodec, SwinCodecConfig
from semcom.harness.data import synthetic_images

# Criterion name -> outcome, filled by the acceptance tests via the fixture below.
_ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    def _record(name: str, passed: bool = True):
        _ACCEPTANCE_RESULTS[name] = "PASS" if passed else "FAIL"
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    criterion = item.get_closest_marker("criterion")
    if criterion is not None and report.failed:
        _ACCEPTANCE_RESULTS[criterion.args[0]] = "FAIL"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"ACCEPTANCE {name}: {outcome}")


@pytest.fixture
def images8() -> torch.Tensor:
    """Eight synthetic 32x32 images as a float32 batch."""
    return torch.from_numpy(synthetic_images(8, seed=11).astype(np.float32))


@pytest.fixture
def tiny_swin_config() -> SwinCodecConfig:
    return SwinCodecConfig(embed_dim=8, num_heads=2, window_sizes=(2, 2),
                           depths=(2, 2), latent_channels=8)


@pytest.fixture
def tiny_codec(tiny_swin_config) -> SemanticCodec:
    torch.manual_seed(0)
    codec = SemanticCodec("swin", latent_channels=8, swin_config=tiny_swin_config)
    codec.eval()
    return codec
