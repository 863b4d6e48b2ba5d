import numpy as np
import pytest

from submax.core import DataMatrix, gaussian_matrix
from submax.errors import MatrixFormatError
from submax.matrix_io import MAGIC, from_binary, from_csv, read_matrix, to_binary, to_csv, write_matrix


def test_binary_roundtrip_and_layout():
    W = gaussian_matrix(3, 4, 5)
    data = to_binary(W)
    assert data[:8] == MAGIC
    assert int.from_bytes(data[8:16], "little") == 3
    assert int.from_bytes(data[16:24], "little") == 4
    assert len(data) == 24 + 8 * 12
    assert from_binary(data) == W


def test_csv_roundtrip_exact():
    W = gaussian_matrix(5, 2, 6)
    assert from_csv(to_csv(W)) == W
    assert from_csv("a,b\n1,2\n3,4\n", header=True) == DataMatrix(np.array([[1.0, 2], [3, 4]]))


@pytest.mark.parametrize("data", [b"GRMMAT01", MAGIC + (2).to_bytes(8, "little") * 2 + b"\0" * 8,
                                  b"XXXXXXXX" + b"\0" * 16])
def test_binary_malformed(data):
    with pytest.raises(MatrixFormatError):
        from_binary(data)


@pytest.mark.parametrize("text", ["", "1,2\n3\n", "1,x\n", "1,nan\n"])
def test_csv_malformed(text):
    with pytest.raises(MatrixFormatError):
        from_csv(text)


def test_read_write_detects_format(tmp_path):
    W = gaussian_matrix(3, 3, 1)
    for name in ("m.bin", "m.csv"):
        write_matrix(W, tmp_path / name)
        assert read_matrix(tmp_path / name) == W
    assert (tmp_path / "m.bin").read_bytes()[:8] == MAGIC
    (tmp_path / "bad").write_bytes(b"\xff\xfe\x00")
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "bad")
