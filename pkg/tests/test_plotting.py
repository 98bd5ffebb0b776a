from optnet.plotting import gnuplot_script, plot_rows

ROWS = [
    {"n": n, "strategy": s, "mean_total": v * n, "mean_per_node": v, "std": 0.5, "std_per_node": 0.1, "trials": 3}
    for n in (8, 12, 16)
    for s, v in (("bell_union", n / 4), ("merging", 2.0))
]


def test_plot_rows_writes_two_pngs(tmp_path):
    paths = plot_rows(ROWS, tmp_path / "fig.csv", title="demo")
    assert [p.name for p in paths] == ["fig_total.png", "fig_per_node.png"]
    for p in paths:
        assert p.read_bytes()[:4] == b"\x89PNG"


def test_gnuplot_script_mentions_each_strategy():
    text = gnuplot_script("fig.csv", ["bell_union", "merging"])
    assert text.count("yerrorlines") == 2
    assert "'fig.csv'" in text
