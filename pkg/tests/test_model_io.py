import pytest
import sys
import os

# Add project root to sys.path to allow importing modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
import numpy as np
from pathlib import Path
from conftest import three_band_data
from modt_core.errors import CorruptFile, IoError, VersionMismatch
from modt_core.model_io import FORMAT_VERSION, load_model, model_to_dict, save_model
from modt_core.predict import predict
from modt_core.trainer import TrainConfig, train


@pytest.fixture
def trained_model():
    d = three_band_data(n=150, seed=2)
    model, _ = train(d, TrainConfig(e=3, d=2, iterations=5, seed=3))
    return model, d


def test_save_load_preserves_predictions(tmp_path, trained_model):
    """Test that a reloaded model predicts identically and keeps its metadata"""
    model, d = trained_model
    path = tmp_path / 'model.json'
    save_model(model, path)
    loaded = load_model(path)

    np.testing.assert_array_equal(predict(loaded, d.X), predict(model, d.X))
    np.testing.assert_array_equal(loaded.gating.theta, model.gating.theta)
    assert loaded.gating.mode.to_dict() == model.gating.mode.to_dict()
    assert loaded.class_names == model.class_names
    assert loaded.train_meta['config']['e'] == 3
    assert 'threads' not in loaded.train_meta['config']


def test_saved_file_layout(tmp_path, trained_model):
    """Test top-level keys and that saving twice is byte-identical"""
    model, _ = trained_model
    a, b = tmp_path / 'a.json', tmp_path / 'b.json'
    save_model(model, a)
    save_model(load_model(a), b)
    assert a.read_bytes() == b.read_bytes()

    data = json.loads(a.read_text(encoding='utf-8'))
    assert data['format'] == 'modt-model'
    assert data['version'] == FORMAT_VERSION
    assert set(data) == {'format', 'version', 'class_names', 'feature_names', 'encoding', 'gating', 'trees', 'train_meta'}
    assert len(data['trees']) == 3


def test_load_errors(tmp_path, trained_model):
    """Test missing, truncated, foreign and future-version files"""
    model, _ = trained_model

    # Case 1: missing file
    with pytest.raises(IoError):
        load_model(tmp_path / 'nope.json')

    # Case 2: truncated JSON
    path = tmp_path / 'model.json'
    save_model(model, path)
    text = path.read_text(encoding='utf-8')
    path.write_text(text[: len(text) // 2], encoding='utf-8')
    with pytest.raises(CorruptFile):
        load_model(path)

    # Case 3: some other JSON document
    path.write_text('{"hello": "world"}', encoding='utf-8')
    with pytest.raises(CorruptFile):
        load_model(path)

    # Case 4: future version
    data = model_to_dict(model)
    data['version'] = FORMAT_VERSION + 1
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(VersionMismatch):
        load_model(path)

    # Case 5: right header, broken body
    data = model_to_dict(model)
    del data['trees']
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(CorruptFile):
        load_model(path)

    # Case 6: not UTF-8 at all
    path.write_bytes(b'\xff\xfe{"format": "modt-model"}')
    with pytest.raises(CorruptFile):
        load_model(path)


def test_save_retries_when_file_is_locked(tmp_path, trained_model, mocker):
    """Test the PermissionError retry loop"""
    model, _ = trained_model
    sleep = mocker.patch('modt_core.retry.time.sleep')
    real_write = Path.write_text
    calls = {'n': 0}

    def flaky(self, *args, **kwargs):
        calls['n'] += 1
        if calls['n'] == 1:
            raise PermissionError("locked")
        return real_write(self, *args, **kwargs)

    mocker.patch.object(Path, 'write_text', flaky)
    path = tmp_path / 'model.json'
    save_model(model, path)
    assert calls['n'] == 2
    sleep.assert_called_once_with(1)
    mocker.stopall()
    assert load_model(path).e == 3


def test_save_gives_up_after_retries(tmp_path, trained_model, mocker):
    """Test IoError after repeated PermissionError"""
    model, _ = trained_model
    mocker.patch('modt_core.retry.time.sleep')
    write = mocker.patch.object(Path, 'write_text', side_effect=PermissionError("locked"))
    with pytest.raises(IoError):
        save_model(model, tmp_path / 'model.json')
    assert write.call_count == 3
