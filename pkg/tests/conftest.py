import pytest

from groundkit import synthetic


@pytest.fixture(scope="session")
def dedup_corpus(tmp_path_factory):
    """100 elements drawn from 40 visuals, with the ground-truth visual per element."""
    return synthetic.dedup_fixture(tmp_path_factory.mktemp("dedup"), n_visuals=40, total=100, seed=0)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    return synthetic.random_corpus(tmp_path_factory.mktemp("small"), n_screenshots=6, elements=(5, 40), seed=4)


@pytest.fixture(scope="session")
def spatial_corpus(tmp_path_factory):
    """50 screenshots of up to 200 elements each; no images needed."""
    return synthetic.random_corpus(
        tmp_path_factory.mktemp("spatial"),
        n_screenshots=50,
        elements=(20, 200),
        seed=7,
        size_choices=((1280, 800), (1920, 1080)),
        images=False,
    )
