import hashlib
import json
import struct
import zlib

import numpy as np
import pytest

from lintra import (
    Correspondence,
    DataMismatchError,
    ImageSet,
    ModelFormatError,
    TaskSpec,
    Translator,
    align_skew,
    apply_task,
    fit_paired,
    fit_pca,
    load_model,
    project,
    reconstruct,
    save_model,
)
from lintra.model_store import MAGIC

from conftest import random_images


@pytest.fixture(scope="module")
def translator():
    source = random_images(40, 6, 6, seed=1)
    flipped = apply_task(TaskSpec("vflip"), source)
    basis_a = align_skew(fit_pca(flipped, 8, seed=0), flipped)
    basis_b = align_skew(fit_pca(source, 8, seed=0), source)
    lmap = fit_paired(project(basis_a, flipped), project(basis_b, source),
                      Correspondence.identity(40))
    return Translator.bundle(basis_a, basis_b, lmap, {"rank": 8, "seed": 0})


def test_bundle_validates_rank_agreement():
    source = random_images(30, 4, 4, seed=2)
    basis8 = fit_pca(source, 8, seed=0)
    basis6 = fit_pca(source, 6, seed=0)
    lmap = fit_paired(project(basis8, source), project(basis8, source),
                      Correspondence.identity(30))
    with pytest.raises(ValueError, match="rank"):
        Translator.bundle(basis8, basis6, lmap)


def test_translate_mean_image_gives_target_mean(translator):
    mean_a = ImageSet(np.clip(translator.basis_a.mean[None, :].astype(np.float64), 0, 1),
                      translator.basis_a.shape, ("mean.png",))
    out = translator.translate(mean_a)
    expected = np.clip(translator.basis_b.mean.astype(np.float64), 0, 1)
    assert np.abs(out.data[0] - expected).max() <= 1e-6


def test_translate_preserves_ids_and_checks_shape(translator):
    images = random_images(5, 6, 6, seed=3)
    out = translator.translate(images)
    assert out.ids == images.ids
    assert out.shape == translator.basis_b.shape
    with pytest.raises(DataMismatchError):
        translator.translate(random_images(2, 4, 4, seed=4))


def test_identity_task_translation_matches_reconstruction():
    # A == B with known pairing fits a near-identity map, so translation
    # reduces to projecting and reconstructing in the shared basis.
    source = random_images(50, 8, 8, seed=5)
    basis = align_skew(fit_pca(source, 10, seed=0), source)
    codes = project(basis, source)
    lmap = fit_paired(codes, codes, Correspondence.identity(50))
    bundle = Translator.bundle(basis, basis, lmap)
    out = bundle.translate(source)
    recon = reconstruct(basis, codes)
    assert np.abs(out.data - recon.data).max() <= 1e-3


def test_save_load_round_trip_is_exact(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.basis_a.mean, translator.basis_a.mean)
    assert np.array_equal(loaded.basis_a.components, translator.basis_a.components)
    assert np.array_equal(loaded.basis_a.eigenvalues, translator.basis_a.eigenvalues)
    assert np.array_equal(loaded.basis_b.components, translator.basis_b.components)
    assert np.array_equal(loaded.map.matrix, translator.map.matrix)
    assert loaded.map.mode == translator.map.mode
    assert loaded.basis_a.shape == translator.basis_a.shape
    assert loaded.basis_a.skew_aligned == translator.basis_a.skew_aligned
    assert loaded.created == translator.created
    assert loaded.config_snapshot == translator.config_snapshot
    assert loaded.basis_a.total_variance == translator.basis_a.total_variance


def test_two_saves_are_byte_identical(tmp_path, translator):
    p1, p2 = tmp_path / "m1.lut", tmp_path / "m2.lut"
    save_model(translator, p1)
    save_model(translator, p2)
    assert hashlib.sha256(p1.read_bytes()).digest() == hashlib.sha256(p2.read_bytes()).digest()


def test_resave_of_loaded_model_is_byte_identical(tmp_path, translator):
    p1, p2 = tmp_path / "m1.lut", tmp_path / "m2.lut"
    save_model(translator, p1)
    save_model(load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_no_stray_temp_files(tmp_path, translator):
    save_model(translator, tmp_path / "model.lut")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["model.lut"]


def test_truncated_file_rejected(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-20])
    with pytest.raises(ModelFormatError, match="truncated|manifest covers"):
        load_model(path)


def test_bad_magic_and_version(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    blob = path.read_bytes()
    (tmp_path / "bad.lut").write_bytes(b"NOTAMODL" + blob[8:])
    with pytest.raises(ModelFormatError, match="bad magic"):
        load_model(tmp_path / "bad.lut")
    (tmp_path / "v2.lut").write_bytes(b"LINUDT99" + blob[8:])
    with pytest.raises(ModelFormatError, match="version"):
        load_model(tmp_path / "v2.lut")


def test_flipped_array_byte_fails_checksum(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    blob = bytearray(path.read_bytes())
    blob[-3] ^= 0xFF  # inside the last array blob
    path.write_bytes(bytes(blob))
    with pytest.raises(ModelFormatError, match="checksum"):
        load_model(path)


def _patch_array(path, name, transform):
    """Rewrite one stored array (fixing its checksum) to simulate tampering."""
    blob = path.read_bytes()
    (header_len,) = struct.unpack("<I", blob[8:12])
    header = json.loads(blob[12:12 + header_len].decode())
    arrays_start = 12 + header_len
    entry = next(e for e in header["arrays"] if e["name"] == name)
    start = arrays_start + entry["offset"]
    array = np.frombuffer(blob[start:start + entry["nbytes"]], dtype="<f4").copy()
    array = transform(array.reshape(entry["shape"])).astype("<f4")
    raw = array.tobytes()
    entry["crc32"] = zlib.crc32(raw)
    new_header = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    path.write_bytes(
        blob[:8] + struct.pack("<I", len(new_header)) + new_header
        + blob[arrays_start:start] + raw + blob[start + entry["nbytes"]:]
    )


def test_nonorthogonal_map_rejected_even_with_valid_checksum(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    _patch_array(path, "map", lambda q: q * 3.0)
    with pytest.raises(ModelFormatError, match="orthogonal"):
        load_model(path)


def test_corrupted_components_rejected(tmp_path, translator):
    path = tmp_path / "model.lut"
    save_model(translator, path)
    _patch_array(path, "components_a", lambda w: w + 0.5)
    with pytest.raises(ModelFormatError, match="orthonormality"):
        load_model(path)
