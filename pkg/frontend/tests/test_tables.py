import pytest

from eetlab_plots.tables import WrongRowCount, render_table1

HEADER = "p,eta,sigma,q,threshold,eet_time,t_low,t_high,method,N,bc,censored\n"


def rows(values):
    conds = [("5", "inf"), ("5", "1.5"), ("5", "0.5"), ("inf", "inf")]
    return HEADER + "".join(
        f"2.5,{eta},{sigma},1000,1e-05,{v},0,0,oracle,4096,periodic,0\n"
        for (eta, sigma), v in zip(conds, values)
    )


def test_reference_values_give_zero_deltas(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text(rows([413.0, 417.0, 431.6, 455.9]))
    deltas = render_table1(src, tmp_path / "out.md")
    assert deltas == [0.0, 0.0, 0.0, 0.0]
    body = (tmp_path / "out.md").read_text()
    assert "| eta=5 sigma=inf | 413.0 | 413.0 | +0.0 |" in body


def test_measured_values_signed_deltas(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text(rows([413.4, 417.4, 432.0, 456.2]))
    deltas = render_table1(src, tmp_path / "out.md")
    assert deltas == pytest.approx([0.4, 0.4, 0.4, 0.3], abs=1e-9)


def test_wrong_row_count_rejected(tmp_path):
    src = tmp_path / "t.csv"
    src.write_text(rows([413.0, 417.0, 431.6, 455.9]) +
                   "2.5,7,inf,1000,1e-05,430,0,0,oracle,4096,periodic,0\n")
    with pytest.raises(WrongRowCount):
        render_table1(src, tmp_path / "out.md")


def test_missing_condition_rejected(tmp_path):
    src = tmp_path / "t.csv"
    body = rows([413.0, 417.0, 431.6, 455.9]).splitlines()
    body[4] = body[4].replace("inf,inf", "9,inf")
    src.write_text("\n".join(body) + "\n")
    with pytest.raises(WrongRowCount, match="eta=inf"):
        render_table1(src, tmp_path / "out.md")
