import vlasso as v
from vlasso.figures import render_report_figures


def test_report_figures_written(tmp_path):
    cfg = v.ExperimentConfig(
        p=30, n=15, s=2, B=10.0, sigma=1.0, trials=3, master_seed=2,
        estimators=(v.EstimatorSpec("lasso_known"),
                    v.EstimatorSpec("strategy_b", C=0.5)),
    )
    report = v.run_monte_carlo(cfg)
    written = render_report_figures(report, tmp_path)
    assert {p.name for p in written} == {"detections.png", "sigma_hat.png"}
    for p in written:
        assert p.stat().st_size > 1000
