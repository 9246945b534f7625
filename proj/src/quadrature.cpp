#include "subcurv/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "subcurv/curvature.hpp"
#include "subcurv/errors.hpp"

namespace subcurv {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw Error("gauss_legendre: need at least one node");
  // Golub-Welsch: eigen-decompose the Jacobi matrix of the Legendre
  // three-term recurrence.
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jm(k - 1, k) = b;
    jm(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  Rule1D r;
  r.nodes = es.eigenvalues();
  r.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v = es.eigenvectors()(0, k);
    r.weights(k) = 2.0 * v * v;
  }
  return r;
}

Rule1D coordinate_rule(CoordRule rule, double lo, double hi, int n) {
  if (!(lo < hi)) throw Error("coordinate_rule: empty range");
  if (n < 1) throw Error("coordinate_rule: need at least one node");
  const double len = hi - lo;
  Rule1D r;
  switch (rule) {
    case CoordRule::Periodic: {
      r.nodes.resize(n);
      r.weights.resize(n);
      for (int k = 0; k < n; ++k) {
        r.nodes(k) = lo + len * k / n;
        r.weights(k) = len / n;
      }
      break;
    }
    case CoordRule::GaussLegendre: {
      Rule1D gl = gauss_legendre(n);
      r.nodes.resize(n);
      r.weights.resize(n);
      for (int k = 0; k < n; ++k) {
        r.nodes(k) = lo + 0.5 * len * (gl.nodes(k) + 1.0);
        r.weights(k) = 0.5 * len * gl.weights(k);
      }
      break;
    }
    case CoordRule::PolarCos: {
      // t = lo + len/pi * arccos(u), u Gauss-Legendre on [-1, 1]:
      // dt = len/pi * du / sin(alpha); smooth integrands carry a sin(alpha)
      // inside sqrt(det g), so the quotient stays regular.
      Rule1D gl = gauss_legendre(n);
      r.nodes.resize(n);
      r.weights.resize(n);
      for (int k = 0; k < n; ++k) {
        // Reverse u so nodes come out increasing in t.
        const double u = gl.nodes(n - 1 - k);
        const double alpha = std::acos(u);
        r.nodes(k) = lo + len / M_PI * alpha;
        r.weights(k) = len / M_PI * gl.weights(n - 1 - k) / std::sin(alpha);
      }
      break;
    }
  }
  return r;
}

long long QuadratureGrid::total_nodes() const {
  long long t = 1;
  for (const auto& r : rules) t *= r.nodes.size();
  return t;
}

QuadratureGrid build_grid(const ChartDomain& dom, const MetricField& g,
                          int nodes_per_coord) {
  dom.validate();
  return build_grid(dom, g,
                    std::vector<int>(static_cast<std::size_t>(dom.dim),
                                     nodes_per_coord));
}

QuadratureGrid build_grid(const ChartDomain& dom, const MetricField& g,
                          const std::vector<int>& nodes_per_coord) {
  dom.validate();
  if (nodes_per_coord.size() != static_cast<std::size_t>(dom.dim))
    throw Error("build_grid: node counts do not match the chart dimension");
  for (int n : nodes_per_coord)
    if (n < 2) throw Error("build_grid: too few nodes per coordinate");
  QuadratureGrid grid;
  grid.domain = dom;
  grid.metric = g;
  grid.rules.reserve(static_cast<std::size_t>(dom.dim));
  for (int c = 0; c < dom.dim; ++c)
    grid.rules.push_back(
        coordinate_rule(dom.rule[static_cast<std::size_t>(c)], dom.lo(c), dom.hi(c),
                        nodes_per_coord[static_cast<std::size_t>(c)]));
  return grid;
}

namespace {

int resolve_threads(int threads) {
  if (threads > 0) return std::min(threads, 16);
  if (const char* env = std::getenv("SUBCURV_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return std::min(t, 16);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(std::min(hw, 8u)) : 1;
}

}  // namespace

std::vector<double> integrate_many(
    const QuadratureGrid& grid,
    const std::vector<std::function<double(const QuadPoint&)>>& fs,
    int threads) {
  const int dim = grid.domain.dim;
  const long long total = grid.total_nodes();
  const std::size_t nf = fs.size();
  if (nf == 0) return {};

  constexpr int kChunks = 64;
  std::vector<double> chunk_sums(static_cast<std::size_t>(kChunks) * nf, 0.0);

  auto run_chunk = [&](int chunk) {
    const long long begin = total * chunk / kChunks;
    const long long end = total * (chunk + 1) / kChunks;
    QuadPoint node;
    node.point.resize(dim);
    std::vector<double> acc(nf, 0.0);
    for (long long flat = begin; flat < end; ++flat) {
      long long rem = flat;
      double w = 1.0;
      for (int c = dim - 1; c >= 0; --c) {
        const auto& rule = grid.rules[static_cast<std::size_t>(c)];
        const long long n = rule.nodes.size();
        const long long i = rem % n;
        rem /= n;
        node.point(c) = rule.nodes(i);
        w *= rule.weights(i);
      }
      MatS<D1> g1 = grid.metric(seed1(node.point));
      node.G.resize(dim, dim);
      Tens3 dG(static_cast<std::size_t>(dim), Eigen::MatrixXd(dim, dim));
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
          const D1& e = g1(a, b);
          node.G(a, b) = e.val;
          for (int c = 0; c < dim; ++c)
            dG[static_cast<std::size_t>(c)](a, b) = partial(e, c);
        }
      const double det = node.G.determinant();
      if (!(det > 1e-14)) throw SingularMetricError("quadrature node: metric not positive");
      node.Ginv = node.G.inverse();
      node.sqrt_det = std::sqrt(det);
      node.gamma = christoffel(node.Ginv, dG);
      const double vw = w * node.sqrt_det;
      for (std::size_t k = 0; k < nf; ++k) acc[k] += vw * fs[k](node);
    }
    for (std::size_t k = 0; k < nf; ++k)
      chunk_sums[static_cast<std::size_t>(chunk) * nf + k] = acc[k];
  };

  const int nthreads = std::min<long long>(resolve_threads(threads), total);
  if (nthreads <= 1) {
    for (int c = 0; c < kChunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (int c = t; c < kChunks; c += nthreads) run_chunk(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Chunk-ordered reduction: independent of the thread count.
  std::vector<double> out(nf, 0.0);
  for (int c = 0; c < kChunks; ++c)
    for (std::size_t k = 0; k < nf; ++k)
      out[k] += chunk_sums[static_cast<std::size_t>(c) * nf + k];
  return out;
}

double integrate(const QuadratureGrid& grid, const ScalarField& f, int threads) {
  auto r = integrate_many(
      grid, {[&f](const QuadPoint& n) { return f(n.point); }}, threads);
  return r[0];
}

double volume(const QuadratureGrid& grid, int threads) {
  auto r = integrate_many(grid, {[](const QuadPoint&) { return 1.0; }}, threads);
  return r[0];
}

std::vector<double> divergence_theorem_residuals(const QuadratureGrid& grid,
                                                 const std::vector<VectorField>& fields,
                                                 int threads) {
  const int dim = grid.domain.dim;
  std::vector<std::function<double(const QuadPoint&)>> fs;
  fs.reserve(fields.size() * 2);
  for (const VectorField& x : fields) {
    fs.push_back([&x, dim](const QuadPoint& n) {
      VecS<D1> xv = x(seed1(n.point));
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += partial(xv(i), i);
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k)
          s += n.gamma[static_cast<std::size_t>(i)](i, k) * value_of(xv(k));
      return s;
    });
    fs.push_back([&x](const QuadPoint& n) {
      VecS<double> xv = x(n.point);
      return std::sqrt(xv.dot(n.G * xv));
    });
  }
  std::vector<double> sums = integrate_many(grid, fs, threads);
  std::vector<double> out(fields.size());
  for (std::size_t k = 0; k < fields.size(); ++k)
    out[k] = std::abs(sums[2 * k]) / (1.0 + sums[2 * k + 1]);
  return out;
}

}  // namespace subcurv
