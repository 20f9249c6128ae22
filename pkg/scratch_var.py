"""Prototype: EG ascent on pair measures with Newton KL-projection."""
import time
import numpy as np
from percwalk.lattice import TorusLattice
from percwalk.models import sample_bernoulli
from percwalk.clusters import label_clusters
from percwalk.chain import EnvironmentChain
from percwalk.perron import log_mgf_perron


def kl_project(chain, mu_hat, lam=None, tol=1e-13, max_newton=60):
    """KL-project mu_hat onto equal marginals + simplex.

    scaled(x,e) = mu_hat(x,e) exp(lam(x) - lam(x+e)) / Z.
    Newton on the dual Phi(lam) = log Z.
    """
    m = chain.n_states
    mask = chain.open_mask
    src, dirs, dst = chain.incoming()
    if lam is None:
        lam = np.zeros(m)
    logmu = np.where(mask, np.log(np.maximum(mu_hat, 1e-300)), -np.inf)
    for it in range(max_newton):
        logscaled = logmu + lam[:, None]
        np.subtract.at(logscaled, (src, dirs), lam[dst])
        a = logscaled[mask].max()
        w = np.zeros_like(mu_hat)
        w[mask] = np.exp(logscaled[mask] - a)
        Z = w.sum()
        w /= Z
        m1 = w.sum(axis=1)
        m2 = np.zeros(m)
        np.add.at(m2, dst, w[src, dirs])
        r = m1 - m2
        gap = np.abs(r).sum()
        if gap <= tol:
            return w, lam, it
        # Hessian: diag(m1+m2) - (M + M^T) - r r^T  (Laplacian-like)
        M = np.zeros((m, m))
        np.add.at(M, (src, dst), w[src, dirs])
        H = np.diag(m1 + m2) - (M + M.T) - np.outer(r, r)
        H += 1e-14 * np.eye(m)
        # pin gauge: constants in null space -> fix lam[0] = 0
        Hs = H[1:, 1:]
        rs = r[1:]
        try:
            delta = np.linalg.solve(Hs, rs)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(Hs, rs, rcond=None)[0]
        step = np.zeros(m)
        step[1:] = -delta
        # damped
        t = 1.0
        lam = lam + t * step
    return w, lam, max_newton


def objective(chain, w, fvals):
    mask = chain.open_mask
    m1 = w.sum(axis=1)
    pi = chain.srw_rows()
    pos = w > 0
    val = np.sum(w[pos] * fvals[pos])
    val -= np.sum(w[pos] * (np.log(w[pos]) - np.log(m1[:, None][pos[:, :1].repeat(w.shape[1],1)] if False else (m1[:, None] * pi)[pos])))
    return val


def variational(chain, fvals, max_iter=3000, eta=1.0):
    mask = chain.open_mask
    m = chain.n_states
    pi = chain.srw_rows()
    # start: uniform over open pairs (srw invariant measure)
    w = np.where(mask, 1.0, 0.0)
    w /= w.sum()
    lam = np.zeros(m)
    prev = -np.inf
    logpi = np.where(mask, np.log(pi), 0.0)
    for it in range(max_iter):
        m1 = w.sum(axis=1)
        k = np.where(mask, w / np.maximum(m1[:, None], 1e-300), 0.0)
        score = np.where(mask, fvals + logpi - np.where(mask, np.log(np.maximum(k, 1e-300)), 0.0), -np.inf)
        mu_hat = np.where(mask, w * np.exp(eta * score), 0.0)
        w, lam, nit = kl_project(chain, mu_hat, lam)
        val = objective(chain, w, fvals)
        if abs(val - prev) < 1e-12:
            return val, it, True
        prev = val
    return prev, max_iter, False


def run(L, p, seed, theta):
    lat = TorusLattice(2, L)
    cfg = sample_bernoulli(lat, p, seed)
    lab = label_clusters(cfg)
    ch = EnvironmentChain(cfg, lab)
    fvals = (ch.direction_vecs @ np.asarray(theta))[None, :].repeat(ch.n_states, 0)
    t0 = time.time()
    pr = log_mgf_perron(ch, theta)
    t1 = time.time()
    val, iters, conv = variational(ch, fvals)
    t2 = time.time()
    print(f"L={L} p={p} seed={seed} m={ch.n_states} perron={pr.value:.12f} "
          f"var={val:.12f} diff={abs(val-pr.value):.2e} EGiters={iters} conv={conv} "
          f"t_perron={t1-t0:.2f}s t_var={t2-t1:.2f}s")


if __name__ == "__main__":
    run(8, 0.7, 3, (0.5, 0.0))
    run(16, 0.7, 42, (0.5, 0.0))
    run(16, 0.7, 7, (0.0, -0.5))
    run(16, 0.6, 11, (0.5, 0.0))
