import pytest
import sys
import os

# Add project root to sys.path to allow importing modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pandas as pd
from conftest import three_band_data
from modt_core import search
from modt_core.errors import DegenerateExpert, InvalidConfig, TrainingError
from modt_core.search import (
    BenchmarkProtocol, SearchSpace, TrialResult, benchmark, random_search, rank_trials,
    report_markdown, run_trials, sample_configs, write_report,
)
from modt_core.trainer import TrainConfig


@pytest.fixture
def small_space():
    return SearchSpace(e=2, d=1, iterations_range=(2, 4))


def test_sampled_configs_stay_in_space(small_space):
    """Test that every sampled configuration lies inside the search space"""
    configs = sample_configs(small_space, 200, seed=0)
    assert all(small_space.contains(c) for c in configs)
    gammas = [c.gamma for c in configs]
    assert min(gammas) >= 1e-2 and max(gammas) <= 10.0
    assert len({c.seed for c in configs}) > 100

    # Case 1: outside values
    assert not small_space.contains(TrainConfig(e=2, d=1, gamma=20.0, iterations=3))
    assert not small_space.contains(TrainConfig(e=3, d=1, gamma=1.0, iterations=3))


def test_collapsed_space_returns_that_config():
    """Test that a single-point space always yields the same configuration"""
    space = SearchSpace(
        e=2, d=1, gamma_range=(0.5, 0.5), iterations_range=(3, 3), seed_range=(7, 7),
        model_selections=('last_iteration',), selections=('pca',),
    )
    configs = sample_configs(space, 5, seed=3)
    assert all(c == configs[0] for c in configs)
    assert configs[0].gamma == pytest.approx(0.5)
    assert (configs[0].iterations, configs[0].seed, configs[0].selection) == (3, 7, 'pca')


def test_space_validation():
    """Test invalid ranges"""
    with pytest.raises(InvalidConfig):
        SearchSpace(gamma_range=(0.0, 1.0)).validate()
    with pytest.raises(InvalidConfig):
        SearchSpace(iterations_range=(5, 2)).validate()
    with pytest.raises(InvalidConfig):
        SearchSpace(selections=()).validate()


def test_random_search_single_trial(small_space):
    """Test n_trials = k_best = 1 returns that trial"""
    d = three_band_data(n=120, seed=0)
    best = random_search(d, small_space, n_trials=1, k_best=1, seed=5)
    assert len(best) == 1
    assert best[0].rank == 1
    assert best[0].config == sample_configs(small_space, 1, seed=5)[0]
    assert 0.0 <= best[0].score <= 1.0

    with pytest.raises(InvalidConfig):
        random_search(d, small_space, n_trials=2, k_best=3, seed=0)


def test_random_search_is_deterministic(small_space, tmp_path):
    """Test same seed -> same ranked configs, and the trial log"""
    d = three_band_data(n=120, seed=1)
    log = tmp_path / 'trials.csv'
    a = random_search(d, small_space, n_trials=4, k_best=2, seed=9, trial_log=log)
    b = random_search(d, small_space, n_trials=4, k_best=2, seed=9, threads=2)
    assert [(t.config, t.score) for t in a] == [(t.config, t.score) for t in b]
    assert a[0].score >= a[1].score

    frame = pd.read_csv(log)
    assert len(frame) == 4
    assert {'trial', 'gamma', 'iterations', 'seed', 'score'} <= set(frame.columns)


def test_rank_trials_order_and_ties():
    """Test descending score with earlier trial winning ties, failed trials dropped"""
    c = TrainConfig()
    trials = [
        TrialResult(c, 0.8, 0), TrialResult(c, 0.9, 1), TrialResult(c, None, 2, error='x'),
        TrialResult(c, 0.9, 3), TrialResult(c, 0.7, 4),
    ]
    ranked = rank_trials(trials, 3)
    assert [t.trial_index for t in ranked] == [1, 3, 0]
    assert [t.rank for t in ranked] == [1, 2, 3]


def test_failed_trials_are_skipped(small_space, mocker):
    """Test that a trial raising a training error is logged and skipped"""
    d = three_band_data(n=120, seed=2)
    real_train = search.train
    calls = {'n': 0}

    def flaky(dataset, config, threads=None):
        calls['n'] += 1
        if calls['n'] == 1:
            raise DegenerateExpert(0, 0.0)
        return real_train(dataset, config, threads=threads)

    mocker.patch('modt_core.search.train', side_effect=flaky)
    trials = run_trials(d, small_space, 3, seed=0)
    assert trials[0].score is None and 'DegenerateExpert' in trials[0].error
    assert all(t.score is not None for t in trials[1:])

    mocker.patch('modt_core.search.train', side_effect=DegenerateExpert(0, 0.0))
    with pytest.raises(TrainingError):
        random_search(d, small_space, n_trials=2, k_best=1, seed=0)


def test_benchmark_rows_and_report(tmp_path):
    """Test a tiny benchmark: one row per method and a readable table"""
    d = three_band_data(n=160, seed=3)
    protocol = BenchmarkProtocol(
        n_trials=2, k_best=1, reps=2, dt_depths=(2,), rf_trees=3,
        space=SearchSpace(iterations_range=(2, 3)),
    )
    report = benchmark(d, protocol, dataset_name='bands')
    assert report['method'].tolist() == ['MoDT-2D', 'MoDT-FG', 'DT d=2', 'RF d=2 e=3', 'RF']
    assert list(report.columns) == [
        'dataset', 'method', 'train_mean', 'train_std', 'test_mean', 'test_std', 'nodes_mean', 'train_seconds', 'runs',
    ]
    assert (report['runs'] == 2).all()
    assert report['test_mean'].between(0.0, 1.0).all()
    assert report.loc[report['method'] == 'DT d=2', 'nodes_mean'].iloc[0] <= 7

    text = report_markdown(report)
    assert text.splitlines()[0] == '| dataset | method | train | test | nodes | train time (s) |'
    assert len(text.splitlines()) == 2 + 5
    assert ' ± ' in text

    csv_path, md_path = tmp_path / 'r.csv', tmp_path / 'r.md'
    write_report(report, csv_path, md_path)
    assert len(pd.read_csv(csv_path)) == 5
    assert md_path.read_text(encoding='utf-8') == text


def test_benchmark_method_filter():
    """Test restricting and validating the method list"""
    protocol = BenchmarkProtocol(methods=('DT d=3', 'RF'))
    assert protocol.method_names() == ['DT d=3', 'RF']
    with pytest.raises(InvalidConfig):
        BenchmarkProtocol(methods=('SVM',)).method_names()

    d = three_band_data(n=80, seed=4)
    report = benchmark(d, BenchmarkProtocol(methods=('DT d=2',), dt_depths=(2,), reps=3), dataset_name='x')
    assert len(report) == 1
    np.testing.assert_allclose(report['runs'], [3])
