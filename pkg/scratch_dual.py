"""Dual solver prototype: BB-GD vs L-BFGS per epsilon stage."""
import sys
import time
import numpy as np
from scipy.special import logsumexp
import scipy.optimize
from percwalk.lattice import TorusLattice
from percwalk.models import sample_bernoulli
from percwalk.clusters import label_clusters
from percwalk.chain import EnvironmentChain
from percwalk.perron import log_mgf_perron


def make(L, p, seed):
    lat = TorusLattice(2, L)
    cfg = sample_bernoulli(lat, p, seed)
    lab = label_clusters(cfg)
    return EnvironmentChain(cfg, lab)


class DualProblem:
    def __init__(self, chain, fvals):
        self.chain = chain
        self.mask = chain.open_mask
        self.m = chain.n_states
        self.src, self.dirs, self.dst = chain.incoming()
        logpi = np.where(self.mask, np.log(np.where(self.mask, chain.srw_rows(), 1.0)), 0.0)
        self.base = np.where(self.mask, logpi + fvals, -np.inf)

    def L_of(self, g):
        z = self.base + g[:, None]
        gdst = np.zeros_like(z)
        gdst[self.src, self.dirs] = g[self.dst]
        z = z - gdst
        zmax = np.where(self.mask, z, -np.inf).max(axis=1)
        return zmax + np.log(np.where(self.mask, np.exp(z - zmax[:, None]), 0.0).sum(axis=1)), z

    def J_and_grad(self, g, eps):
        Lv, z = self.L_of(g)
        s = Lv / eps
        a = logsumexp(s)
        J = eps * (a - np.log(self.m))
        phi = np.exp(s - a)
        q = np.where(self.mask, np.exp(z - Lv[:, None]), 0.0)
        grad = phi - np.bincount(self.dst, weights=(phi[self.src] * q[self.src, self.dirs]), minlength=self.m)
        return J, grad


def stage_bb(prob, eps, g, max_iter=3000, gtol=1e-12):
    J, grad = prob.J_and_grad(g, eps)
    evals = 1
    step = eps  # natural scale
    prev = None
    for it in range(max_iter):
        gn2 = float(grad @ grad)
        if np.sqrt(gn2) <= gtol:
            break
        if prev is not None:
            sk, yk = g - prev[0], grad - prev[1]
            sy = float(sk @ yk)
            if sy > 1e-300:
                step = float(sk @ sk) / sy
        alpha = step
        ok = False
        for _ in range(50):
            g_try = g - alpha * grad
            J_try, grad_try = prob.J_and_grad(g_try, eps)
            evals += 1
            if J_try <= J - 1e-4 * alpha * gn2:
                ok = True
                break
            alpha *= 0.5
        prev = (g, grad)
        if not ok:
            break
        g, J, grad = g_try, J_try, grad_try
    return g - g.mean(), it + 1, evals


def stage_lbfgs(prob, eps, g, max_iter=3000):
    res = scipy.optimize.minimize(
        lambda x: prob.J_and_grad(x, eps), g, jac=True, method="L-BFGS-B",
        options=dict(maxiter=max_iter, ftol=1e-18, gtol=1e-12, maxcor=20))
    return res.x - res.x.mean(), res.nit, res.nfev


def run(method, L, p, seed, theta, schedule):
    chain = make(L, p, seed)
    fvals = (chain.direction_vecs @ np.asarray(theta))[None, :].repeat(chain.n_states, 0)
    pr = log_mgf_perron(chain, theta)
    prob = DualProblem(chain, fvals)
    g = np.zeros(chain.n_states)
    t0 = time.time()
    rows = []
    for eps in schedule:
        if method == "bb":
            g, its, evals = stage_bb(prob, eps, g)
        else:
            g, its, evals = stage_lbfgs(prob, eps, g)
        Lv, _ = prob.L_of(g)
        hard = float(Lv.max())
        rows.append((eps, hard - pr.value, its, evals))
    dt = time.time() - t0
    print(f"{method} L={L} p={p} seed={seed} m={chain.n_states} t={dt:.2f}s")
    for eps, gap, its, evals in rows:
        print(f"  eps={eps:<8g} hard-perron={gap:+.3e} it={its} ev={evals}")
    sys.stdout.flush()
    return dt


SCHED = [1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 3e-4, 1e-4, 3e-5, 1e-5]
if __name__ == "__main__":
    for method in (sys.argv[1],):
        run(method, 16, 0.7, 42, (0.5, 0.0), SCHED)
        run(method, 16, 0.7, 7, (0.0, -0.5), SCHED)
