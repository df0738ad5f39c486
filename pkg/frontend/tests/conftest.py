import pytest

from synthdata import HEADER, envelope_row


@pytest.fixture
def envelope_file(tmp_path):
    def make(name="m1.5_v0.2_envelope.csv", rows=None):
        if rows is None:
            rows = [envelope_row(0.0, 0.1, loc=0, f_lo=0.0, f_hi=0.0),
                    envelope_row(0.1, 0.2, loc=1, f_lo=40.0, f_hi=90.0),
                    envelope_row(0.2, 0.3, loc=1, branch=1,
                                 f_lo=30.0, f_hi=60.0)]
        path = tmp_path / name
        path.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
        return path
    return make


@pytest.fixture
def dump_file(tmp_path):
    def make(name="sets.txt", text=None):
        if text is None:
            text = ("branch 0 main\n"
                    "entry 0 0 0.1\n"
                    "c 0.5 0 0 0 0.05 0\n"
                    "g 0.1 0 0 0 0 0\n"
                    "g 0 0 0 0 0.05 0\n"
                    "end\n"
                    "entry 1 0.1 0.2\n"
                    "c -0.001 0 0 0 0.15 0\n"
                    "g 0.0005 0 0 0 0.05 0\n"
                    "end\n")
        path = tmp_path / name
        path.write_text(text)
        return path
    return make
