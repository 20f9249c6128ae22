"""Prototype v3: chord-Newton projection with cached factorization."""
import time
import numpy as np
import scipy.linalg
from percwalk.lattice import TorusLattice
from percwalk.models import sample_bernoulli
from percwalk.clusters import label_clusters
from percwalk.chain import EnvironmentChain
from percwalk.perron import log_mgf_perron


class Plan:
    def __init__(self, chain):
        self.chain = chain
        self.mask = chain.open_mask
        self.src, self.dirs, self.dst = chain.incoming()
        self.m = chain.n_states
        self.flat_pair = self.src * self.m + self.dst
        self.pi = chain.srw_rows()
        self.logpi = np.where(self.mask, np.log(np.where(self.mask, self.pi, 1.0)), 0.0)
        self.factor = None
        self.factor_age = 0

    def second_marginal(self, w):
        return np.bincount(self.dst, weights=w[self.src, self.dirs], minlength=self.m)

    def scale(self, logmu, lam):
        ls = logmu + lam[:, None]
        lam_dst = np.zeros_like(logmu)
        lam_dst[self.src, self.dirs] = lam[self.dst]
        ls -= lam_dst
        a = ls.max()
        w = np.where(self.mask, np.exp(ls - a), 0.0)
        w /= w.sum()
        return w

    def refresh_factor(self, w, m1, m2):
        M = np.bincount(self.flat_pair, weights=w[self.src, self.dirs],
                        minlength=self.m * self.m).reshape(self.m, self.m)
        H = np.diag(m1 + m2) - (M + M.T)
        Hs = H[1:, 1:] + 1e-14 * np.eye(self.m - 1)
        self.factor = scipy.linalg.cho_factor(Hs, check_finite=False)
        self.factor_age = 0

    def project(self, mu_hat, lam, tol):
        logmu = np.where(self.mask, np.log(np.maximum(mu_hat, 1e-300)), -np.inf)
        nit = 0
        nfac = 0
        gap_prev = np.inf
        while True:
            w = self.scale(logmu, lam)
            m1 = w.sum(axis=1)
            m2 = self.second_marginal(w)
            r = m1 - m2
            gap = np.abs(r).sum()
            if gap <= tol or nit >= 80:
                return w, lam, nit, nfac, gap
            if self.factor is None or gap > 0.5 * gap_prev:
                # chord iteration is stalling; refactor at the current point
                if self.factor is None or nit > 0 or self.factor_age > 40:
                    self.refresh_factor(w, m1, m2)
                    nfac += 1
            delta = scipy.linalg.cho_solve(self.factor, r[1:], check_finite=False)
            lam = lam.copy()
            lam[1:] -= delta
            self.factor_age += 1
            gap_prev = gap
            nit += 1

    def objective(self, w, fvals):
        m1 = w.sum(axis=1)
        pos = w > 0
        ref = (m1[:, None] * self.pi)
        return float(np.sum(w[pos] * (fvals[pos] - np.log(w[pos]) + np.log(ref[pos]))))


def variational(chain, fvals, tol_obj=1e-12, max_iter=5000):
    plan = Plan(chain)
    mask = plan.mask
    w = np.where(mask, 1.0, 0.0)
    w /= w.sum()
    lam = np.zeros(plan.m)
    eta = 1.0
    val = plan.objective(w, fvals)
    newton_total = 0
    fac_total = 0
    small_moves = 0
    for it in range(max_iter):
        m1 = w.sum(axis=1)
        logk = np.where(mask, np.log(np.maximum(w, 1e-300)) - np.log(np.maximum(m1, 1e-300))[:, None], 0.0)
        score = np.where(mask, fvals + plan.logpi - logk, 0.0)
        proj_tol = 1e-14
        while True:
            mu_hat = np.where(mask, w * np.exp(eta * score), 0.0)
            w_new, lam_new, nit, nfac, gap = plan.project(mu_hat, lam, proj_tol)
            newton_total += nit
            fac_total += nfac
            val_new = plan.objective(w_new, fvals)
            if val_new >= val - 1e-15 or eta < 1e-3:
                break
            eta *= 0.5
        improved = val_new - val
        w, lam = w_new, lam_new
        if val_new >= val:
            eta = min(eta * 1.25, 64.0)
        val = val_new
        if abs(improved) < tol_obj:
            small_moves += 1
            if small_moves >= 3:
                return val, it + 1, newton_total, fac_total, True
        else:
            small_moves = 0
    return val, max_iter, newton_total, fac_total, False


def run(L, p, seed, theta):
    lat = TorusLattice(2, L)
    cfg = sample_bernoulli(lat, p, seed)
    lab = label_clusters(cfg)
    ch = EnvironmentChain(cfg, lab)
    fvals = (ch.direction_vecs @ np.asarray(theta))[None, :].repeat(ch.n_states, 0)
    pr = log_mgf_perron(ch, theta)
    t1 = time.time()
    val, iters, newtons, facs, conv = variational(ch, fvals)
    t2 = time.time()
    print(f"L={L} p={p} seed={seed} m={ch.n_states} diff={abs(val-pr.value):.2e} "
          f"EG={iters} newton={newtons} fact={facs} conv={conv} t={t2-t1:.2f}s")
    return t2 - t1


if __name__ == "__main__":
    total = 0.0
    total += run(8, 0.7, 3, (0.5, 0.0))
    total += run(16, 0.7, 42, (0.5, 0.0))
    total += run(16, 0.7, 7, (0.0, -0.5))
    total += run(16, 0.6, 11, (0.5, 0.0))
    total += run(16, 0.7, 99, (0.5, 0.0))
    print(f"total {total:.2f}s for 5 -> est {total/5*80:.0f}s for 80")
