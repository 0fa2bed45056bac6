import numpy as np
import pytest


@pytest.fixture
def run_dir(tmp_path):
    """A miniature run directory conforming to the trainer's CSV schemas."""
    rng = np.random.default_rng(0)
    xs = np.linspace(-1, 1, 6)
    ys = np.linspace(-1, 1, 5)
    rows = ["x,y,u_exact,u_pred,abs_err"]
    for x in xs:
        for y in ys:
            u = np.sin(np.pi * x) * np.sin(np.pi * y)
            up = u + 0.01 * rng.normal()
            rows.append(f"{x},{y},{u},{up},{abs(up - u)}")
    (tmp_path / "field.csv").write_text("\n".join(rows) + "\n")

    rows = ["iter,total,L_ic,L_bc,L_r,lam_ic,lam_bc,lam_r"]
    lam_bc, lam_r = 1.0, 1.0
    for it in range(50):
        lam_bc *= 1.08
        lam_r *= 0.99
        rows.append(f"{it},{10 * 0.9 ** it},nan,{5 * 0.9 ** it},{5 * 0.92 ** it},"
                    f"nan,{lam_bc},{lam_r}")
    (tmp_path / "history.csv").write_text("\n".join(rows) + "\n")

    rows = ["problem,model,layers,units,gamma,seeds,median_rel_l2,"
            "rel_l2_per_seed,status"]
    for layers in (3, 7):
        for model, err in (("pinn", 0.2), ("ia-pinn", 0.03),
                           ("iaw-pinn", 0.02), ("i-pinn", 0.006)):
            rows.append(f"helmholtz,{model},{layers},50,,3,{err * layers / 5},"
                        f"{err};{err};{err},ok")
    (tmp_path / "summary.csv").write_text("\n".join(rows) + "\n")
    return tmp_path
