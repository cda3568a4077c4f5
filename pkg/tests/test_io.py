import pytest

from seqsynth import Corpus, DataFormatError, StateAlphabet
from seqsynth import io as seqio


@pytest.fixture
def corpus():
    alphabet = StateAlphabet(("car", "home", "work"))
    return Corpus.from_arrays(
        alphabet,
        [[1, 1, 0, 2, 2, 2, 0, 1], [1, 0, 2, 2, 2, 2, 0, 1]],
        ids=["day-1", "day-2"],
    )


def test_interval_round_trip(tmp_path, corpus):
    path = tmp_path / "corpus.csv"
    seqio.save_corpus(corpus, path)
    loaded = seqio.load_corpus(path)
    assert loaded == corpus


def test_save_load_save_byte_identical(tmp_path, corpus):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    seqio.save_corpus(corpus, first)
    seqio.save_corpus(seqio.load_corpus(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_episode_round_trip(tmp_path, corpus):
    path = tmp_path / "episodes.csv"
    seqio.save_corpus(corpus, path, seqio.EPISODE)
    loaded = seqio.load_corpus(path, seqio.EPISODE)
    assert loaded == corpus
    second = tmp_path / "episodes2.csv"
    seqio.save_corpus(loaded, second, seqio.EPISODE)
    assert path.read_bytes() == second.read_bytes()


def test_episode_durations_make_interval_length(tmp_path):
    path = tmp_path / "episodes.csv"
    path.write_text(
        "id,state,duration\n"
        "d1,home,420\nd1,car,30\nd1,work,510\nd1,home,480\n",
        encoding="utf-8",
    )
    corpus = seqio.load_corpus(path, seqio.EPISODE)
    assert corpus.length == 1440
    assert corpus.alphabet.labels == ("car", "home", "work")


def test_interval_writer_lf_and_utf8(tmp_path, corpus):
    path = tmp_path / "corpus.csv"
    seqio.save_corpus(corpus, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines()[0] == "id,s1,s2,s3,s4,s5,s6,s7,s8"


def test_ragged_row_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,s1,s2\na,home,work\nb,home\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="row 3"):
        seqio.load_corpus(path)


def test_duplicate_id_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,s1\na,home\na,work\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="duplicate"):
        seqio.load_corpus(path)


def test_unknown_label_without_extension(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("id,s1\na,home\nb,car\n", encoding="utf-8")
    alphabet = StateAlphabet(("home",))
    with pytest.raises(DataFormatError, match="unknown state labels"):
        seqio.load_corpus(path, alphabet=alphabet, extend_alphabet=False)
    loaded = seqio.load_corpus(path, alphabet=alphabet)
    assert loaded.alphabet.labels == ("home", "car")


def test_alphabet_is_sorted_union(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("id,s1,s2\na,work,home\nb,car,home\n", encoding="utf-8")
    assert seqio.load_corpus(path).alphabet.labels == ("car", "home", "work")


def test_continuous_round_trip(tmp_path):
    from seqsynth import ContinuousSeries

    series = [
        ContinuousSeries([0.0, 12.5, 760.0], "s1"),
        ContinuousSeries([1.0, 2.0, 3.0], "s2"),
    ]
    path = tmp_path / "cont.csv"
    seqio.save_continuous(series, path)
    loaded = seqio.load_continuous(path)
    assert loaded == series
    second = tmp_path / "cont2.csv"
    seqio.save_continuous(loaded, second)
    assert path.read_bytes() == second.read_bytes()


def test_continuous_missing_error_and_drop(tmp_path):
    path = tmp_path / "cont.csv"
    path.write_text("id,v1,v2\na,1.0,\nb,2.0,3.0\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="missing"):
        seqio.load_continuous(path)
    kept = seqio.load_continuous(path, on_missing="drop")
    assert [s.id for s in kept] == ["b"]


def test_continuous_negative_rejected(tmp_path):
    path = tmp_path / "cont.csv"
    path.write_text("id,v1\na,-3\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="negative"):
        seqio.load_continuous(path)


def test_cluster_labels_round_trip(tmp_path):
    labels = {"day-1": 0, "day-2": 2, "day-3": 1}
    path = tmp_path / "labels.csv"
    seqio.save_cluster_labels(labels, path)
    assert seqio.load_cluster_labels(path) == labels


def test_alphabet_manifest_round_trip(tmp_path):
    alphabet = StateAlphabet(("a", "b"))
    path = tmp_path / "alphabet.json"
    seqio.save_alphabet(alphabet, path, interval_minutes=1)
    assert seqio.load_alphabet(path) == alphabet


def test_labels_needing_csv_quoting_round_trip(tmp_path):
    # commas, quotes, and non-ascii labels must survive both formats
    alphabet = StateAlphabet(('leisure, "fun"', "home", "café"))
    corpus = Corpus.from_arrays(alphabet, [[0, 1, 2, 0], [2, 2, 1, 0]])
    for fmt in (seqio.INTERVAL, seqio.EPISODE):
        path = tmp_path / f"c-{fmt}.csv"
        seqio.save_corpus(corpus, path, fmt)
        assert seqio.load_corpus(path, fmt, alphabet=alphabet) == corpus
