#include "inret/tensor/ops.hpp"

#include <cmath>
#include <limits>

namespace inret {
namespace {

template <typename Scalar>
using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
  }
}

template <typename Scalar>
void require_same(const Var<Scalar>& a, const Var<Scalar>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Scalar>
Tensor<Scalar> scalar_tensor(Scalar v) {
  return Tensor<Scalar>::constant({1}, v);
}

}  // namespace

template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& input, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  const auto& x = input.value();
  const auto& w = weight.value();
  const auto& b = bias.value();
  require_rank(x.shape(), 2, "linear input");
  require_rank(w.shape(), 2, "linear weight");
  if (x.dim(1) != w.dim(0)) {
    throw ShapeError("linear: inner dimensions differ, input " + shape_string(x.shape()) + " weight " +
                     shape_string(w.shape()));
  }
  if (b.size() != w.dim(1)) throw ShapeError("linear: bias length does not match output width");

  Tensor<Scalar> out({x.dim(0), w.dim(1)});
  out.matrix().noalias() = x.matrix() * w.matrix();
  out.matrix().rowwise() += b.data().transpose();

  const int xi = input.id(), wi = weight.id(), bi = bias.id();
  return input.tape().record(std::move(out), {input, weight, bias}, [xi, wi, bi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    if (t.needs_grad(xi)) t.grad_buffer(xi).matrix().noalias() += g.matrix() * t.value(wi).matrix().transpose();
    if (t.needs_grad(wi)) t.grad_buffer(wi).matrix().noalias() += t.value(xi).matrix().transpose() * g.matrix();
    if (t.needs_grad(bi)) t.grad_buffer(bi).data() += g.matrix().colwise().sum().transpose();
  });
}

template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& input, const Var<Scalar>& weight) {
  const auto& x = input.value();
  const auto& w = weight.value();
  require_rank(x.shape(), 2, "linear input");
  require_rank(w.shape(), 2, "linear weight");
  if (x.dim(1) != w.dim(0)) throw ShapeError("linear: inner dimensions differ");
  Tensor<Scalar> out({x.dim(0), w.dim(1)});
  out.matrix().noalias() = x.matrix() * w.matrix();
  const int xi = input.id(), wi = weight.id();
  return input.tape().record(std::move(out), {input, weight}, [xi, wi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    if (t.needs_grad(xi)) t.grad_buffer(xi).matrix().noalias() += g.matrix() * t.value(wi).matrix().transpose();
    if (t.needs_grad(wi)) t.grad_buffer(wi).matrix().noalias() += t.value(xi).matrix().transpose() * g.matrix();
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same(a, b, "add");
  Tensor<Scalar> out(a.shape(), a.value().data() + b.value().data());
  const int ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    if (t.needs_grad(ai)) t.grad_buffer(ai).data() += g.data();
    if (t.needs_grad(bi)) t.grad_buffer(bi).data() += g.data();
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same(a, b, "sub");
  Tensor<Scalar> out(a.shape(), a.value().data() - b.value().data());
  const int ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    if (t.needs_grad(ai)) t.grad_buffer(ai).data() += g.data();
    if (t.needs_grad(bi)) t.grad_buffer(bi).data() -= g.data();
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same(a, b, "mul");
  Tensor<Scalar> out(a.shape(), a.value().data().cwiseProduct(b.value().data()));
  const int ai = a.id(), bi = b.id();
  return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    if (t.needs_grad(ai)) t.grad_buffer(ai).data() += g.data().cwiseProduct(t.value(bi).data());
    if (t.needs_grad(bi)) t.grad_buffer(bi).data() += g.data().cwiseProduct(t.value(ai).data());
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  Tensor<Scalar> out(a.shape(), a.value().data() * factor);
  const int ai = a.id();
  return a.tape().record(std::move(out), {a}, [ai, factor](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(ai).data() += g.data() * factor;
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().data().cwiseMax(Scalar(0)));
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() +=
        (t.value(xi).data().array() > Scalar(0)).select(g.data().array(), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> sine(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().data().array().sin().matrix());
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() += g.data().array() * t.value(xi).data().array().cos();
  });
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().data().array().square().matrix());
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() += Scalar(2) * g.data().array() * t.value(xi).data().array();
  });
}

template <typename Scalar>
Var<Scalar> abs(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().data().cwiseAbs());
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() += g.data().array() * t.value(xi).data().array().sign();
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  const int xi = x.id();
  return x.tape().record(scalar_tensor(x.value().data().sum()), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() += g[0];
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& x) {
  const auto n = static_cast<Scalar>(x.value().size());
  if (x.value().size() == 0) throw ShapeError("mean of an empty tensor");
  const int xi = x.id();
  return x.tape().record(scalar_tensor(x.value().data().sum() / n), {x}, [xi, n](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data().array() += g[0] / n;
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of zero parts");
  const Index rows = parts.front().value().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require_rank(p.shape(), 2, "concat_cols part");
    if (p.value().rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.value().cols();
  }
  Tensor<Scalar> out({rows, cols});
  std::vector<int> ids;
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    out.matrix().middleCols(off, p.value().cols()) = p.value().matrix();
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.value().cols();
  }
  auto& tape = parts.front().tape();
  auto fn = [ids, offsets](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.needs_grad(ids[i])) continue;
      auto& gb = t.grad_buffer(ids[i]);
      gb.matrix() += g.matrix().middleCols(offsets[i], gb.cols());
    }
  };
  return tape.record(std::move(out), parts, fn);
}

template <typename Scalar>
Var<Scalar> repeat_rows(const Var<Scalar>& x, Index times) {
  require_rank(x.shape(), 2, "repeat_rows");
  if (times < 1) throw ShapeError("repeat_rows: times must be >= 1");
  const auto& v = x.value();
  const Index g = v.dim(0), c = v.dim(1);
  Tensor<Scalar> out({g * times, c});
  for (Index r = 0; r < g; ++r) out.matrix().middleRows(r * times, times).rowwise() = v.matrix().row(r);
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi, g, times, c](Tape<Scalar>& t, const Tensor<Scalar>& gr) {
    auto gx = t.grad_buffer(xi).matrix();
    for (Index r = 0; r < g; ++r) gx.row(r) += gr.matrix().middleRows(r * times, times).colwise().sum();
    (void)c;
  });
}

template <typename Scalar>
Var<Scalar> max_rows_grouped(const Var<Scalar>& x, Index group) {
  require_rank(x.shape(), 2, "max_rows_grouped");
  const auto& v = x.value();
  if (group < 1 || v.dim(0) % group != 0) throw ShapeError("max_rows_grouped: rows not divisible by group size");
  const Index groups = v.dim(0) / group, c = v.dim(1);
  Tensor<Scalar> out({groups, c});
  IndexMatrix arg(groups, c);
  auto m = v.matrix();
  for (Index gi = 0; gi < groups; ++gi) {
    for (Index j = 0; j < c; ++j) {
      Index best = gi * group;
      Scalar bv = m(best, j);
      for (Index r = gi * group + 1; r < (gi + 1) * group; ++r) {
        if (m(r, j) > bv) {
          bv = m(r, j);
          best = r;
        }
      }
      out.matrix()(gi, j) = bv;
      arg(gi, j) = static_cast<std::int32_t>(best);
    }
  }
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi, arg](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    auto gx = t.grad_buffer(xi).matrix();
    for (Index gi = 0; gi < arg.rows(); ++gi)
      for (Index j = 0; j < arg.cols(); ++j) gx(arg(gi, j), j) += g.matrix()(gi, j);
  });
}

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       BatchNormStats<Scalar>& stats, bool training) {
  require_rank(x.shape(), 2, "batch_norm input");
  const auto& v = x.value();
  const Index n = v.dim(0), c = v.dim(1);
  if (gamma.value().size() != c || beta.value().size() != c) throw ShapeError("batch_norm: affine size mismatch");
  if (stats.running_mean.size() != c) throw ShapeError("batch_norm: running statistics size mismatch");
  if (training && n < 2) throw ShapeError("batch_norm: training mode needs at least 2 rows");

  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  RowVec mu, var;
  if (training) {
    mu = v.matrix().colwise().mean();
    var = (v.matrix().rowwise() - mu).array().square().colwise().mean().matrix();
    const Scalar unbias = static_cast<Scalar>(n) / static_cast<Scalar>(n - 1);
    stats.running_mean.data() =
        (Scalar(1) - stats.momentum) * stats.running_mean.data() + stats.momentum * mu.transpose();
    stats.running_var.data() =
        (Scalar(1) - stats.momentum) * stats.running_var.data() + stats.momentum * unbias * var.transpose();
  } else {
    mu = stats.running_mean.data().transpose();
    var = stats.running_var.data().transpose();
  }
  const RowVec inv_std = (var.array() + stats.eps).rsqrt().matrix();
  RowMatrix<Scalar> xhat = (v.matrix().rowwise() - mu).array().rowwise() * inv_std.array();
  Tensor<Scalar> out({n, c});
  out.matrix() = (xhat.array().rowwise() * gamma.value().data().transpose().array()).rowwise() +
                 beta.value().data().transpose().array();

  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.tape().record(std::move(out), {x, gamma, beta},
                         [xi, gi, bi, xhat = std::move(xhat), inv_std, training](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                           auto gm = g.matrix();
                           if (t.needs_grad(gi))
                             t.grad_buffer(gi).data() += gm.cwiseProduct(xhat).colwise().sum().transpose();
                           if (t.needs_grad(bi)) t.grad_buffer(bi).data() += gm.colwise().sum().transpose();
                           if (!t.needs_grad(xi)) return;
                           const RowVec gam = t.value(gi).data().transpose();
                           RowMatrix<Scalar> gxhat = gm.array().rowwise() * gam.array();
                           if (training) {
                             const RowVec mg = gxhat.colwise().mean();
                             const RowVec mgx = gxhat.cwiseProduct(xhat).colwise().mean();
                             RowMatrix<Scalar> d = gxhat.rowwise() - mg;
                             d -= (xhat.array().rowwise() * mgx.array()).matrix();
                             t.grad_buffer(xi).matrix() += (d.array().rowwise() * inv_std.array()).matrix();
                           } else {
                             t.grad_buffer(xi).matrix() += (gxhat.array().rowwise() * inv_std.array()).matrix();
                           }
                         });
}

template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Index groups,
                       Scalar eps) {
  const auto& v = x.value();
  if (v.rank() < 2) throw ShapeError("group_norm: expected B x C x ...");
  const Index b = v.dim(0), c = v.dim(1);
  const Index spatial = v.size() / (b * c);
  if (groups < 1 || c % groups != 0) throw ShapeError("group_norm: channels not divisible by groups");
  if (gamma.value().size() != c || beta.value().size() != c) throw ShapeError("group_norm: affine size mismatch");
  const Index per_group = (c / groups) * spatial;

  Tensor<Scalar> out(v.shape());
  Tensor<Scalar> xhat(v.shape());
  Vector<Scalar> inv_std(b * groups);
  for (Index bi = 0; bi < b; ++bi) {
    for (Index gi = 0; gi < groups; ++gi) {
      const Index off = (bi * c + gi * (c / groups)) * spatial;
      auto seg = v.data().segment(off, per_group);
      const Scalar mu = seg.mean();
      const Scalar var = (seg.array() - mu).square().mean();
      const Scalar is = Scalar(1) / std::sqrt(var + eps);
      inv_std[bi * groups + gi] = is;
      xhat.data().segment(off, per_group) = (seg.array() - mu) * is;
    }
    for (Index ci = 0; ci < c; ++ci) {
      const Index off = (bi * c + ci) * spatial;
      out.data().segment(off, spatial) =
          xhat.data().segment(off, spatial).array() * gamma.value()[ci] + beta.value()[ci];
    }
  }
  const int xi = x.id(), gmi = gamma.id(), bti = beta.id();
  return x.tape().record(
      std::move(out), {x, gamma, beta},
      [xi, gmi, bti, xhat = std::move(xhat), inv_std, b, c, groups, spatial, per_group](Tape<Scalar>& t,
                                                                                         const Tensor<Scalar>& g) {
        const bool need_g = t.needs_grad(gmi), need_b = t.needs_grad(bti), need_x = t.needs_grad(xi);
        Tensor<Scalar> gxhat(g.shape());
        const auto& gam = t.value(gmi);
        for (Index bi = 0; bi < b; ++bi) {
          for (Index ci = 0; ci < c; ++ci) {
            const Index off = (bi * c + ci) * spatial;
            auto gs = g.data().segment(off, spatial);
            if (need_g) t.grad_buffer(gmi)[ci] += gs.dot(xhat.data().segment(off, spatial));
            if (need_b) t.grad_buffer(bti)[ci] += gs.sum();
            gxhat.data().segment(off, spatial) = gs * gam[ci];
          }
        }
        if (!need_x) return;
        auto& gx = t.grad_buffer(xi);
        for (Index bi = 0; bi < b; ++bi) {
          for (Index gi = 0; gi < groups; ++gi) {
            const Index off = (bi * c + gi * (c / groups)) * spatial;
            auto gh = gxhat.data().segment(off, per_group);
            auto xh = xhat.data().segment(off, per_group);
            const Scalar mg = gh.mean();
            const Scalar mgx = gh.dot(xh) / static_cast<Scalar>(per_group);
            gx.data().segment(off, per_group).array() +=
                (gh.array() - mg - xh.array() * mgx) * inv_std[bi * groups + gi];
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> conv3d_down(const Var<Scalar>& input, const Var<Scalar>& kernel, const Var<Scalar>& bias) {
  const auto& x = input.value();
  const auto& k = kernel.value();
  const bool batched = x.rank() == 5;
  if (x.rank() != 4 && !batched) throw ShapeError("conv3d_down: expected C x D^3 or B x C x D^3 input");
  const Index b = batched ? x.dim(0) : 1;
  const Index c = x.dim(batched ? 1 : 0);
  const Index d = x.dim(batched ? 2 : 1);
  if (x.dim(batched ? 3 : 2) != d || x.dim(batched ? 4 : 3) != d) throw ShapeError("conv3d_down: volume must be cubic");
  if (d < 2 || d % 2 != 0) throw ShapeError("conv3d_down: spatial size must be even and >= 2, got " + std::to_string(d));
  if (k.rank() != 5 || k.dim(1) != c || k.dim(2) != 2 || k.dim(3) != 2 || k.dim(4) != 2) {
    throw ShapeError("conv3d_down: kernel must be Co x " + std::to_string(c) + " x 2 x 2 x 2, got " +
                     shape_string(k.shape()));
  }
  const Index co = k.dim(0);
  if (bias.value().size() != co) throw ShapeError("conv3d_down: bias length must equal output channels");

  const Index h = d / 2;
  const Index vox = h * h * h;
  const Index patch = c * 8;
  // Input element feeding (row, col) of the im2col matrix; windows do not
  // overlap, so this map is injective and col2im is a pure scatter.
  IndexMatrix src(b * vox, patch);
  for (Index bi = 0; bi < b; ++bi)
    for (Index z = 0; z < h; ++z)
      for (Index y = 0; y < h; ++y)
        for (Index xx = 0; xx < h; ++xx) {
          const Index row = bi * vox + (z * h + y) * h + xx;
          Index col = 0;
          for (Index ci = 0; ci < c; ++ci)
            for (Index dz = 0; dz < 2; ++dz)
              for (Index dy = 0; dy < 2; ++dy)
                for (Index dx = 0; dx < 2; ++dx) {
                  const Index idx = (((bi * c + ci) * d + (2 * z + dz)) * d + (2 * y + dy)) * d + (2 * xx + dx);
                  src(row, col++) = static_cast<std::int32_t>(idx);
                }
        }
  RowMatrix<Scalar> cols(b * vox, patch);
  for (Index i = 0; i < cols.size(); ++i) cols.data()[i] = x.data()[src.data()[i]];

  Eigen::Map<const RowMatrix<Scalar>> kmat(k.ptr(), co, patch);
  RowMatrix<Scalar> y = cols * kmat.transpose();
  y.rowwise() += bias.value().data().transpose();

  Shape out_shape = batched ? Shape{b, co, h, h, h} : Shape{co, h, h, h};
  Tensor<Scalar> out(out_shape);
  for (Index bi = 0; bi < b; ++bi)
    Eigen::Map<RowMatrix<Scalar>>(out.ptr() + bi * co * vox, co, vox) = y.middleRows(bi * vox, vox).transpose();

  const int xi = input.id(), ki = kernel.id(), bsi = bias.id();
  return input.tape().record(
      std::move(out), {input, kernel, bias},
      [xi, ki, bsi, src = std::move(src), cols = std::move(cols), b, co, vox, patch](Tape<Scalar>& t,
                                                                                      const Tensor<Scalar>& g) {
        RowMatrix<Scalar> gy(b * vox, co);
        for (Index bi = 0; bi < b; ++bi)
          gy.middleRows(bi * vox, vox) = Eigen::Map<const RowMatrix<Scalar>>(g.ptr() + bi * co * vox, co, vox).transpose();
        if (t.needs_grad(ki)) {
          Eigen::Map<RowMatrix<Scalar>>(t.grad_buffer(ki).ptr(), co, patch).noalias() += gy.transpose() * cols;
        }
        if (t.needs_grad(bsi)) t.grad_buffer(bsi).data() += gy.colwise().sum().transpose();
        if (t.needs_grad(xi)) {
          Eigen::Map<const RowMatrix<Scalar>> kmat(t.value(ki).ptr(), co, patch);
          RowMatrix<Scalar> gcols = gy * kmat;
          auto& gx = t.grad_buffer(xi);
          for (Index i = 0; i < gcols.size(); ++i) gx.data()[src.data()[i]] += gcols.data()[i];
        }
      });
}

template <typename Scalar>
Var<Scalar> gather_weighted(const Var<Scalar>& table, const IndexMatrix& index, const RowMatrix<Scalar>& weights) {
  const auto& tb = table.value();
  require_rank(tb.shape(), 2, "gather_weighted table");
  if (index.rows() != weights.rows() || index.cols() != weights.cols()) {
    throw ShapeError("gather_weighted: index and weight matrices differ in shape");
  }
  const Index rows = index.rows(), taps = index.cols(), f = tb.dim(1), n = tb.dim(0);
  Tensor<Scalar> out({rows, f});
  Scalar* o = out.ptr();
  const Scalar* tp = tb.ptr();
  for (Index r = 0; r < rows; ++r) {
    for (Index k = 0; k < taps; ++k) {
      const std::int32_t id = index(r, k);
      if (id < 0) continue;
      if (id >= n) throw ShapeError("gather_weighted: index out of range");
      const Scalar w = weights(r, k);
      const Scalar* src = tp + static_cast<Index>(id) * f;
      for (Index j = 0; j < f; ++j) o[r * f + j] += w * src[j];
    }
  }
  const int ti = table.id();
  return table.tape().record(std::move(out), {table}, [ti, index, weights, f](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    Scalar* gt = t.grad_buffer(ti).ptr();
    const Scalar* gp = g.ptr();
    for (Index r = 0; r < index.rows(); ++r) {
      for (Index k = 0; k < index.cols(); ++k) {
        const std::int32_t id = index(r, k);
        if (id < 0) continue;
        const Scalar w = weights(r, k);
        Scalar* dst = gt + static_cast<Index>(id) * f;
        for (Index j = 0; j < f; ++j) dst[j] += w * gp[r * f + j];
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, Shape shape) {
  Tensor<Scalar> out = x.value().reshaped(std::move(shape));
  const int xi = x.id();
  return x.tape().record(std::move(out), {x}, [xi](Tape<Scalar>& t, const Tensor<Scalar>& g) {
    t.grad_buffer(xi).data() += g.data();
  });
}

template <typename Scalar>
Var<Scalar> softmax_cross_entropy(const Var<Scalar>& logits, const std::vector<int>& labels) {
  const auto& v = logits.value();
  require_rank(v.shape(), 2, "softmax_cross_entropy");
  const Index b = v.dim(0), k = v.dim(1);
  if (static_cast<Index>(labels.size()) != b) throw ShapeError("softmax_cross_entropy: one label per row required");
  RowMatrix<Scalar> prob(b, k);
  Scalar loss = 0;
  for (Index r = 0; r < b; ++r) {
    if (labels[r] < 0 || labels[r] >= k) throw ShapeError("softmax_cross_entropy: label out of range");
    const Scalar mx = v.matrix().row(r).maxCoeff();
    prob.row(r) = (v.matrix().row(r).array() - mx).exp().matrix();
    const Scalar z = prob.row(r).sum();
    prob.row(r) /= z;
    loss -= v.matrix()(r, labels[r]) - mx - std::log(z);
  }
  loss /= static_cast<Scalar>(b);
  const int li = logits.id();
  return logits.tape().record(scalar_tensor(loss), {logits},
                              [li, prob = std::move(prob), labels, b](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                                RowMatrix<Scalar> d = prob;
                                for (Index r = 0; r < b; ++r) d(r, labels[r]) -= Scalar(1);
                                t.grad_buffer(li).matrix() += d * (g[0] / static_cast<Scalar>(b));
                              });
}

#define INRET_INSTANTIATE_OPS(S)                                                                                   \
  template Var<S> linear(const Var<S>&, const Var<S>&, const Var<S>&);                                             \
  template Var<S> linear(const Var<S>&, const Var<S>&);                                                            \
  template Var<S> add(const Var<S>&, const Var<S>&);                                                               \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                                               \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                                               \
  template Var<S> scale(const Var<S>&, S);                                                                         \
  template Var<S> relu(const Var<S>&);                                                                             \
  template Var<S> sine(const Var<S>&);                                                                             \
  template Var<S> square(const Var<S>&);                                                                           \
  template Var<S> abs(const Var<S>&);                                                                              \
  template Var<S> sum(const Var<S>&);                                                                              \
  template Var<S> mean(const Var<S>&);                                                                             \
  template Var<S> concat_cols(const std::vector<Var<S>>&);                                                         \
  template Var<S> repeat_rows(const Var<S>&, Index);                                                               \
  template Var<S> max_rows_grouped(const Var<S>&, Index);                                                          \
  template Var<S> batch_norm(const Var<S>&, const Var<S>&, const Var<S>&, BatchNormStats<S>&, bool);               \
  template Var<S> group_norm(const Var<S>&, const Var<S>&, const Var<S>&, Index, S);                               \
  template Var<S> conv3d_down(const Var<S>&, const Var<S>&, const Var<S>&);                                        \
  template Var<S> gather_weighted(const Var<S>&, const IndexMatrix&, const RowMatrix<S>&);                         \
  template Var<S> reshape(const Var<S>&, Shape);                                                                   \
  template Var<S> softmax_cross_entropy(const Var<S>&, const std::vector<int>&);

INRET_INSTANTIATE_OPS(float)
INRET_INSTANTIATE_OPS(double)

}  // namespace inret
