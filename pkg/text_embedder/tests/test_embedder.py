import json

import numpy as np
import pytest

from text_embedder import EmbedderError, ItemTextRecord, build_item_text, embed_items
from text_embedder.cli import main
from text_embedder.embed import HashingEncoder, load_item_records, resolve_encoder


def records(n=10):
    return [ItemTextRecord(item_id=f"it{i:03d}", text=f"widget number {i}")
            for i in range(n)]


# ---------------------------------------------------------------------------
# text assembly
# ---------------------------------------------------------------------------

def test_build_item_text_fixed_order_and_separator():
    meta = {
        "description": "long form text",
        "title": "Widget",
        "categories": ["Tools", "Widgets"],
        "brand": "Acme",
    }
    assert build_item_text(meta) == "Widget ; Acme ; Tools, Widgets ; long form text"


def test_build_item_text_skips_missing_fields():
    assert build_item_text({"title": "Only title"}) == "Only title"
    assert build_item_text({}) == ""


def test_record_requires_item_id():
    with pytest.raises(EmbedderError):
        ItemTextRecord(item_id="", text="x")


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------

def test_emb1_shape_and_sidecar(tmp_path):
    out = tmp_path / "items.emb1"
    summary = embed_items(records(3), "hash:32", batch_size=2, output_path=out)
    assert summary["n_items"] == 3 and summary["dim"] == 32
    raw = out.read_bytes()
    assert raw[:4] == b"EMB1"
    assert np.frombuffer(raw[12:], dtype="<f4").size == 3 * 32
    ids = (tmp_path / "items.emb1.ids").read_text().splitlines()
    assert ids == ["it000", "it001", "it002"]


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.emb1", tmp_path / "b.emb1"
    embed_items(records(20), "hash:48", batch_size=7, output_path=a)
    embed_items(records(20), "hash:48", batch_size=20, output_path=b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.emb1.ids").read_text() == (tmp_path / "b.emb1.ids").read_text()


def test_duplicate_texts_identical_rows(tmp_path):
    recs = [
        ItemTextRecord("a", "same text"),
        ItemTextRecord("b", "same text"),
        ItemTextRecord("c", "different"),
    ]
    out = tmp_path / "x.emb1"
    embed_items(recs, "hash:32", batch_size=2, output_path=out)
    rows = np.frombuffer(out.read_bytes()[12:], dtype="<f4").reshape(3, 32)
    np.testing.assert_array_equal(rows[0], rows[1])
    assert not np.array_equal(rows[0], rows[2])


def test_empty_text_placeholder_and_warning(tmp_path):
    recs = [ItemTextRecord("a", ""), ItemTextRecord("b", "real text")]
    out = tmp_path / "x.emb1"
    summary = embed_items(recs, "hash:32", batch_size=2, output_path=out)
    assert summary["n_warnings"] == 1
    warning = json.loads((tmp_path / "x.emb1.warnings.jsonl").read_text())
    assert warning["item_id"] == "a" and warning["reason"] == "empty_text"
    # placeholder embedding equals embedding the placeholder directly
    rows = np.frombuffer(out.read_bytes()[12:], dtype="<f4").reshape(2, 32)
    direct = HashingEncoder(32).encode(["unknown item"])[0]
    np.testing.assert_array_equal(rows[0], direct)


def test_duplicate_item_ids_rejected(tmp_path):
    recs = [ItemTextRecord("a", "x"), ItemTextRecord("a", "y")]
    with pytest.raises(EmbedderError, match="duplicate"):
        embed_items(recs, "hash:16", batch_size=2, output_path=tmp_path / "x.emb1")


def test_bad_model_specs():
    with pytest.raises(EmbedderError):
        resolve_encoder("hash:notanumber")
    with pytest.raises(EmbedderError):
        HashingEncoder(0)


# ---------------------------------------------------------------------------
# cross-component round trip (the primary package's reader)
# ---------------------------------------------------------------------------

def test_primary_reader_roundtrip(tmp_path):
    seqblend = pytest.importorskip("seqblend")
    recs = records(50)
    out = tmp_path / "catalog.emb1"
    embed_items(recs, "hash:64", batch_size=16, output_path=out)
    matrix = seqblend.read_embedding_matrix(out)
    assert matrix.n_items == 50 and matrix.dim == 64
    assert matrix.item_ids == tuple(r.item_id for r in recs)
    assert np.isfinite(matrix.rows).all()


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def write_items_jsonl(path, n=5, with_metadata=False):
    with open(path, "w") as fh:
        for i in range(n):
            if with_metadata:
                fh.write(json.dumps({
                    "item_id": f"it{i}", "title": f"Widget {i}",
                    "brand": "Acme", "categories": ["Tools"],
                }) + "\n")
            else:
                fh.write(json.dumps({"item_id": f"it{i}", "text": f"thing {i}"}) + "\n")


def test_cli_happy_path(tmp_path, capsys):
    items = tmp_path / "items.jsonl"
    write_items_jsonl(items, with_metadata=True)
    out = tmp_path / "out.emb1"
    assert main([str(items), str(out), "--model", "hash:32", "--batch-size", "2"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["dim"] == 32 and summary["n_items"] == 5
    assert out.exists() and (tmp_path / "out.emb1.ids").exists()


def test_cli_missing_items_file(tmp_path):
    assert main([str(tmp_path / "nope.jsonl"), str(tmp_path / "o.emb1"),
                 "--model", "hash:8"]) == 2


def test_cli_bad_jsonl(tmp_path):
    items = tmp_path / "items.jsonl"
    items.write_text("{not json}\n")
    assert main([str(items), str(tmp_path / "o.emb1"), "--model", "hash:8"]) == 3


def test_load_item_records_requires_item_id(tmp_path):
    items = tmp_path / "items.jsonl"
    items.write_text('{"title": "no id"}\n')
    with pytest.raises(EmbedderError, match="item_id"):
        load_item_records(items)
