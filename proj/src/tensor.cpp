#include "vernet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vernet {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor: non-positive dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void require(bool cond, const char* msg) {
  if (!cond) throw ShapeError(msg);
}

void require_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2) throw ContractError(std::string(who) + ": expected a 2-D tensor");
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  auto impl = std::make_shared<TensorImpl>();
  std::size_t n = shape_product(shape);
  impl->shape = std::move(shape);
  impl->data.assign(n, 0.0);
  impl->grad.assign(n, 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  std::size_t n = shape_product(shape);
  if (values.size() != n) throw ShapeError("tensor: data length does not match shape");
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->grad.assign(n, 0.0);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::randn(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.data()) v = stddev * rng.normal();
  return t;
}

double Tensor::value() const {
  if (size() != 1) throw ContractError("tensor: value() requires a scalar");
  return impl_->data[0];
}

bool Tensor::all_finite() const {
  for (double v : impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) throw ContractError("backward: loss must be scalar");
  loss.grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

// --- matmul family ----------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions disagree");
  const int r = a.rows(), s = a.cols(), t = b.cols();
  Tensor out = Tensor::zeros({r, t});
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out.data().data();
    for (int i = 0; i < r; ++i) {
      double* crow = pc + static_cast<std::size_t>(i) * t;
      const double* arow = pa + static_cast<std::size_t>(i) * s;
      for (int k = 0; k < s; ++k) {
        const double av = arow[k];
        if (av == 0.0) continue;
        const double* brow = pb + static_cast<std::size_t>(k) * t;
        for (int j = 0; j < t; ++j) crow[j] += av * brow[j];
      }
    }
  }
  tape.record([ia = a, ib = b, io = out, r, s, t]() {
    const double* go = io.grad().data();
    const double* pa = ia.data().data();
    const double* pb = ib.data().data();
    double* ga = ia.grad().data();
    double* gb = ib.grad().data();
    // dA += dC . B^T
    for (int i = 0; i < r; ++i) {
      const double* gorow = go + static_cast<std::size_t>(i) * t;
      double* garow = ga + static_cast<std::size_t>(i) * s;
      for (int k = 0; k < s; ++k) {
        const double* brow = pb + static_cast<std::size_t>(k) * t;
        double acc = 0.0;
        for (int j = 0; j < t; ++j) acc += gorow[j] * brow[j];
        garow[k] += acc;
      }
    }
    // dB += A^T . dC
    for (int i = 0; i < r; ++i) {
      const double* arow = pa + static_cast<std::size_t>(i) * s;
      const double* gorow = go + static_cast<std::size_t>(i) * t;
      for (int k = 0; k < s; ++k) {
        const double av = arow[k];
        if (av == 0.0) continue;
        double* gbrow = gb + static_cast<std::size_t>(k) * t;
        for (int j = 0; j < t; ++j) gbrow[j] += av * gorow[j];
      }
    }
  });
  return out;
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions disagree");
  const int r = a.rows(), s = a.cols(), t = b.rows();
  Tensor out = Tensor::zeros({r, t});
  {
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = out.data().data();
    for (int i = 0; i < r; ++i) {
      const double* arow = pa + static_cast<std::size_t>(i) * s;
      double* crow = pc + static_cast<std::size_t>(i) * t;
      for (int j = 0; j < t; ++j) {
        const double* brow = pb + static_cast<std::size_t>(j) * s;
        double acc = 0.0;
        for (int k = 0; k < s; ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
      }
    }
  }
  tape.record([ia = a, ib = b, io = out, r, s, t]() {
    const double* go = io.grad().data();
    const double* pa = ia.data().data();
    const double* pb = ib.data().data();
    double* ga = ia.grad().data();
    double* gb = ib.grad().data();
    for (int i = 0; i < r; ++i) {
      const double* gorow = go + static_cast<std::size_t>(i) * t;
      const double* arow = pa + static_cast<std::size_t>(i) * s;
      double* garow = ga + static_cast<std::size_t>(i) * s;
      for (int j = 0; j < t; ++j) {
        const double g = gorow[j];
        if (g == 0.0) continue;
        const double* brow = pb + static_cast<std::size_t>(j) * s;
        double* gbrow = gb + static_cast<std::size_t>(j) * s;
        for (int k = 0; k < s; ++k) {
          garow[k] += g * brow[k];
          gbrow[k] += g * arow[k];
        }
      }
    }
  });
  return out;
}

Tensor row_matmul(Tape& tape, const Tensor& v, const Tensor& m) {
  if (v.rank() != 1) throw ContractError("row_matmul: v must be 1-D");
  require_rank2(m, "row_matmul");
  if (v.size() != m.rows()) throw ShapeError("row_matmul: length of v must equal rows of m");
  const int r = m.rows(), d = m.cols();
  Tensor out = Tensor::zeros({d});
  for (int i = 0; i < r; ++i) {
    const double vi = v.at(i);
    if (vi == 0.0) continue;
    for (int j = 0; j < d; ++j) out.at(j) += vi * m.at(i, j);
  }
  tape.record([iv = v, im = m, io = out, r, d]() {
    for (int i = 0; i < r; ++i) {
      double acc = 0.0;
      const double vi = iv.at(i);
      for (int j = 0; j < d; ++j) {
        const double g = io.grad()[static_cast<std::size_t>(j)];
        acc += g * im.at(i, j);
        im.grad()[static_cast<std::size_t>(i) * d + j] += vi * g;
      }
      iv.grad()[static_cast<std::size_t>(i)] += acc;
    }
  });
  return out;
}

// --- elementwise ------------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch");
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.data().size();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  tape.record([ia = a, ib = b, io = out, n]() {
    for (std::size_t i = 0; i < n; ++i) {
      ia.grad()[i] += io.grad()[i];
      ib.grad()[i] += io.grad()[i];
    }
  });
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.data().size();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  tape.record([ia = a, ib = b, io = out, n]() {
    for (std::size_t i = 0; i < n; ++i) {
      ia.grad()[i] += io.grad()[i] * ib.data()[i];
      ib.grad()[i] += io.grad()[i] * ia.data()[i];
    }
  });
  return out;
}

Tensor mul_scalar(Tape& tape, const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.data().size();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * c;
  tape.record([ia = a, io = out, c, n]() {
    for (std::size_t i = 0; i < n; ++i) ia.grad()[i] += c * io.grad()[i];
  });
  return out;
}

Tensor scale_by_element(Tape& tape, const Tensor& x, const Tensor& s, int index) {
  if (index < 0 || index >= s.size()) throw ContractError("scale_by_element: index out of range");
  const double sv = s.at(index);
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.data().size();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = sv * x.data()[i];
  tape.record([ix = x, is = s, io = out, index, sv, n]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ix.grad()[i] += sv * io.grad()[i];
      acc += io.grad()[i] * ix.data()[i];
    }
    is.grad()[static_cast<std::size_t>(index)] += acc;
  });
  return out;
}

// --- affine / layer norm ----------------------------------------------------

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank2(w, "affine");
  if (b.rank() != 1 || b.size() != w.cols()) throw ShapeError("affine: bias shape mismatch");
  const bool vec = (x.rank() == 1);
  const int n = vec ? 1 : x.rows();
  const int in = vec ? x.size() : x.cols();
  if (in != w.rows()) throw ShapeError("affine: input width does not match weight rows");
  const int out_dim = w.cols();
  Tensor out = vec ? Tensor::zeros({out_dim}) : Tensor::zeros({n, out_dim});
  {
    const double* px = x.data().data();
    const double* pw = w.data().data();
    double* po = out.data().data();
    for (int i = 0; i < n; ++i) {
      double* orow = po + static_cast<std::size_t>(i) * out_dim;
      for (int j = 0; j < out_dim; ++j) orow[j] = b.at(j);
      const double* xrow = px + static_cast<std::size_t>(i) * in;
      for (int k = 0; k < in; ++k) {
        const double xv = xrow[k];
        if (xv == 0.0) continue;
        const double* wrow = pw + static_cast<std::size_t>(k) * out_dim;
        for (int j = 0; j < out_dim; ++j) orow[j] += xv * wrow[j];
      }
    }
  }
  tape.record([ix = x, iw = w, ib = b, io = out, n, in, out_dim]() {
    const double* go = io.grad().data();
    const double* px = ix.data().data();
    const double* pw = iw.data().data();
    double* gx = ix.grad().data();
    double* gw = iw.grad().data();
    double* gb = ib.grad().data();
    for (int i = 0; i < n; ++i) {
      const double* gorow = go + static_cast<std::size_t>(i) * out_dim;
      const double* xrow = px + static_cast<std::size_t>(i) * in;
      double* gxrow = gx + static_cast<std::size_t>(i) * in;
      for (int j = 0; j < out_dim; ++j) gb[j] += gorow[j];
      for (int k = 0; k < in; ++k) {
        const double* wrow = pw + static_cast<std::size_t>(k) * out_dim;
        double* gwrow = gw + static_cast<std::size_t>(k) * out_dim;
        double acc = 0.0;
        const double xv = xrow[k];
        for (int j = 0; j < out_dim; ++j) {
          acc += gorow[j] * wrow[j];
          gwrow[j] += xv * gorow[j];
        }
        gxrow[k] += acc;
      }
    }
  });
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  const int d = (x.rank() == 1) ? x.size() : x.cols();
  const int n = (x.rank() == 1) ? 1 : x.rows();
  if (gain.rank() != 1 || gain.size() != d || bias.rank() != 1 || bias.size() != d)
    throw ShapeError("layer_norm: gain/bias must match the last axis");
  Tensor out = Tensor::zeros(x.shape());
  // cache normalized rows and inverse stddev for backward
  auto xhat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * d);
  auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* row = x.data().data() + static_cast<std::size_t>(i) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[static_cast<std::size_t>(i)] = is;
    for (int j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * is;
      (*xhat)[static_cast<std::size_t>(i) * d + j] = h;
      out.data()[static_cast<std::size_t>(i) * d + j] = h * gain.at(j) + bias.at(j);
    }
  }
  tape.record([ix = x, ig = gain, ibias = bias, io = out, xhat, inv_sigma, n, d]() {
    for (int i = 0; i < n; ++i) {
      const double* go = io.grad().data() + static_cast<std::size_t>(i) * d;
      const double* h = xhat->data() + static_cast<std::size_t>(i) * d;
      double* gx = ix.grad().data() + static_cast<std::size_t>(i) * d;
      const double is = (*inv_sigma)[static_cast<std::size_t>(i)];
      double sum_g = 0.0, sum_gh = 0.0;
      for (int j = 0; j < d; ++j) {
        const double gj = go[j] * ig.data()[static_cast<std::size_t>(j)];
        sum_g += gj;
        sum_gh += gj * h[j];
        ig.grad()[static_cast<std::size_t>(j)] += go[j] * h[j];
        ibias.grad()[static_cast<std::size_t>(j)] += go[j];
      }
      const double mg = sum_g / d, mgh = sum_gh / d;
      for (int j = 0; j < d; ++j) {
        const double gj = go[j] * ig.data()[static_cast<std::size_t>(j)];
        gx[j] += (gj - mg - h[j] * mgh) * is;
      }
    }
  });
  return out;
}

// --- softmax ----------------------------------------------------------------

Tensor softmax(Tape& tape, const Tensor& x, int axis, const Tensor* mask) {
  if (axis < 0 || axis >= x.rank()) throw ContractError("softmax: axis out of range");
  if (mask && mask->shape() != x.shape()) throw ShapeError("softmax: mask shape mismatch");
  const int axis_len = x.dim(axis);
  std::size_t inner = 1;
  for (int i = axis + 1; i < x.rank(); ++i) inner *= static_cast<std::size_t>(x.dim(i));
  const std::size_t outer = x.data().size() / (static_cast<std::size_t>(axis_len) * inner);

  Tensor out = Tensor::zeros(x.shape());
  const double* px = x.data().data();
  const double* pm = mask ? mask->data().data() : nullptr;
  double* po = out.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * axis_len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      int valid = 0;
      for (int i = 0; i < axis_len; ++i) {
        const std::size_t idx = base + static_cast<std::size_t>(i) * inner;
        if (pm && pm[idx] == 0.0) continue;
        ++valid;
        mx = std::max(mx, px[idx]);
      }
      if (valid == 0) throw DegenerateSliceError("softmax: fully masked slice");
      double z = 0.0;
      for (int i = 0; i < axis_len; ++i) {
        const std::size_t idx = base + static_cast<std::size_t>(i) * inner;
        if (pm && pm[idx] == 0.0) {
          po[idx] = 0.0;
        } else {
          po[idx] = std::exp(px[idx] - mx);
          z += po[idx];
        }
      }
      for (int i = 0; i < axis_len; ++i) {
        const std::size_t idx = base + static_cast<std::size_t>(i) * inner;
        if (!pm || pm[idx] != 0.0) po[idx] /= z;
      }
    }
  }
  Tensor mask_copy = mask ? *mask : Tensor();
  tape.record([ix = x, io = out, im = mask_copy, axis_len, inner, outer]() {
    const double* p = io.data().data();
    const double* go = io.grad().data();
    const double* pm = im.defined() ? im.data().data() : nullptr;
    double* gx = ix.grad().data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * axis_len * inner + in;
        double dot = 0.0;
        for (int i = 0; i < axis_len; ++i) {
          const std::size_t idx = base + static_cast<std::size_t>(i) * inner;
          if (pm && pm[idx] == 0.0) continue;
          dot += p[idx] * go[idx];
        }
        for (int i = 0; i < axis_len; ++i) {
          const std::size_t idx = base + static_cast<std::size_t>(i) * inner;
          if (pm && pm[idx] == 0.0) continue;
          gx[idx] += p[idx] * (go[idx] - dot);
        }
      }
    }
  });
  return out;
}

// --- pointwise nonlinearities -----------------------------------------------

Tensor gelu(Tape& tape, const Tensor& x) {
  // tanh approximation; smooth everywhere, which keeps finite differences honest
  constexpr double kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kBeta = 0.044715;
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::tanh(kAlpha * (v + kBeta * v * v * v)));
  }
  tape.record([ix = x, io = out, n]() {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = ix.data()[i];
      const double u = kAlpha * (v + kBeta * v * v * v);
      const double t = std::tanh(u);
      const double du = kAlpha * (1.0 + 3.0 * kBeta * v * v);
      const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      ix.grad()[i] += d * io.grad()[i];
    }
  });
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x.data()[i];
    out.data()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  tape.record([ix = x, io = out, n]() {
    for (std::size_t i = 0; i < n; ++i) {
      const double y = io.data()[i];
      ix.grad()[i] += y * (1.0 - y) * io.grad()[i];
    }
  });
  return out;
}

// --- shape surgery ----------------------------------------------------------

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no parts");
  const int rank = parts[0].rank();
  if (axis < 0 || axis >= rank) throw ContractError("concat: axis out of range");
  for (const Tensor& p : parts)
    if (p.rank() != rank) throw ShapeError("concat: rank mismatch");

  if (rank == 1) {
    if (axis != 0) throw ContractError("concat: 1-D tensors concat along axis 0");
    int total = 0;
    for (const Tensor& p : parts) total += p.size();
    Tensor out = Tensor::zeros({total});
    int off = 0;
    for (const Tensor& p : parts) {
      std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
      off += p.size();
    }
    tape.record([ps = parts, io = out]() {
      int off2 = 0;
      for (const Tensor& p : ps) {
        for (int i = 0; i < p.size(); ++i)
          p.grad()[static_cast<std::size_t>(i)] += io.grad()[static_cast<std::size_t>(off2 + i)];
        off2 += p.size();
      }
    });
    return out;
  }

  // 2-D
  if (axis == 0) {
    const int c = parts[0].cols();
    int total = 0;
    for (const Tensor& p : parts) {
      if (p.cols() != c) throw ShapeError("concat: column counts disagree");
      total += p.rows();
    }
    Tensor out = Tensor::zeros({total, c});
    std::size_t off = 0;
    for (const Tensor& p : parts) {
      std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
      off += p.data().size();
    }
    tape.record([ps = parts, io = out]() {
      std::size_t off2 = 0;
      for (const Tensor& p : ps) {
        for (std::size_t i = 0; i < p.data().size(); ++i) p.grad()[i] += io.grad()[off2 + i];
        off2 += p.data().size();
      }
    });
    return out;
  }

  const int r = parts[0].rows();
  int total_c = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != r) throw ShapeError("concat: row counts disagree");
    total_c += p.cols();
  }
  Tensor out = Tensor::zeros({r, total_c});
  int coff = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < p.cols(); ++j) out.at(i, coff + j) = p.at(i, j);
    coff += p.cols();
  }
  tape.record([ps = parts, io = out, r, total_c]() {
    int coff2 = 0;
    for (const Tensor& p : ps) {
      const int pc = p.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < pc; ++j)
          p.grad()[static_cast<std::size_t>(i) * pc + j] +=
              io.grad()[static_cast<std::size_t>(i) * total_c + coff2 + j];
      coff2 += pc;
    }
  });
  return out;
}

Tensor slice_rows(Tape& tape, const Tensor& x, int r0, int r1) {
  require_rank2(x, "slice_rows");
  if (r0 < 0 || r1 > x.rows() || r0 >= r1) throw ContractError("slice_rows: bad range");
  const int c = x.cols();
  Tensor out = Tensor::zeros({r1 - r0, c});
  std::copy(x.data().begin() + static_cast<std::size_t>(r0) * c,
            x.data().begin() + static_cast<std::size_t>(r1) * c, out.data().begin());
  tape.record([ix = x, io = out, r0, c]() {
    const std::size_t n = io.data().size();
    for (std::size_t i = 0; i < n; ++i)
      ix.grad()[static_cast<std::size_t>(r0) * c + i] += io.grad()[i];
  });
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& x, int c0, int c1) {
  require_rank2(x, "slice_cols");
  if (c0 < 0 || c1 > x.cols() || c0 >= c1) throw ContractError("slice_cols: bad range");
  const int r = x.rows(), c = x.cols(), w = c1 - c0;
  Tensor out = Tensor::zeros({r, w});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < w; ++j) out.at(i, j) = x.at(i, c0 + j);
  tape.record([ix = x, io = out, r, c, c0, w]() {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j)
        ix.grad()[static_cast<std::size_t>(i) * c + c0 + j] +=
            io.grad()[static_cast<std::size_t>(i) * w + j];
  });
  return out;
}

// --- reductions ---------------------------------------------------------------

Tensor mean(Tape& tape, const Tensor& x, int axis) {
  require_rank2(x, "mean");
  if (axis != 0 && axis != 1) throw ContractError("mean: axis out of range");
  const int r = x.rows(), c = x.cols();
  if (axis == 0) {
    Tensor out = Tensor::zeros({c});
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out.at(j) += x.at(i, j) / r;
    tape.record([ix = x, io = out, r, c]() {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          ix.grad()[static_cast<std::size_t>(i) * c + j] +=
              io.grad()[static_cast<std::size_t>(j)] / r;
    });
    return out;
  }
  Tensor out = Tensor::zeros({r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i) += x.at(i, j) / c;
  tape.record([ix = x, io = out, r, c]() {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        ix.grad()[static_cast<std::size_t>(i) * c + j] += io.grad()[static_cast<std::size_t>(i)] / c;
  });
  return out;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
  const std::size_t n = x.data().size();
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));
  tape.record([ix = x, io = out, n]() {
    const double g = io.grad()[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) ix.grad()[i] += g;
  });
  return out;
}

Tensor mean_masked(Tape& tape, const Tensor& x, const Tensor& mask) {
  require(x.shape() == mask.shape(), "mean_masked: mask shape mismatch");
  const std::size_t n = x.data().size();
  double acc = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.data()[i] == 0.0) continue;
    acc += x.data()[i];
    ++count;
  }
  if (count == 0) throw DegenerateSliceError("mean_masked: empty mask");
  Tensor out = Tensor::scalar(acc / static_cast<double>(count));
  tape.record([ix = x, im = mask, io = out, n, count]() {
    const double g = io.grad()[0] / static_cast<double>(count);
    for (std::size_t i = 0; i < n; ++i)
      if (im.data()[i] != 0.0) ix.grad()[i] += g;
  });
  return out;
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  tape.record([ix = x, io = out]() {
    const double g = io.grad()[0];
    for (double& gv : ix.grad()) gv += g;
  });
  return out;
}

// --- embeddings ---------------------------------------------------------------

Tensor embed_rows(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
  require_rank2(table, "embed_rows");
  const int d = table.cols();
  const int n = static_cast<int>(ids.size());
  for (int id : ids)
    if (id < 0 || id >= table.rows()) throw ContractError("embed_rows: id out of range");
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i)
    std::copy(table.data().begin() + static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * d,
              table.data().begin() + static_cast<std::size_t>(ids[static_cast<std::size_t>(i)] + 1) * d,
              out.data().begin() + static_cast<std::size_t>(i) * d);
  tape.record([it = table, io = out, ids, n, d]() {
    for (int i = 0; i < n; ++i) {
      const std::size_t src = static_cast<std::size_t>(i) * d;
      const std::size_t dst = static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * d;
      for (int j = 0; j < d; ++j) it.grad()[dst + j] += io.grad()[src + j];
    }
  });
  return out;
}

// --- loss -----------------------------------------------------------------------

Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<std::uint8_t>& mask) {
  require_rank2(logits, "cross_entropy");
  const int n = logits.rows(), classes = logits.cols();
  if (static_cast<int>(targets.size()) != n || static_cast<int>(mask.size()) != n)
    throw ShapeError("cross_entropy: targets/mask length mismatch");
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    ++count;
    if (targets[static_cast<std::size_t>(i)] < 0 || targets[static_cast<std::size_t>(i)] >= classes)
      throw ContractError("cross_entropy: target out of range");
  }
  if (count == 0) throw DegenerateSliceError("cross_entropy: empty mask");

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    double mx = logits.at(i, 0);
    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits.at(i, c));
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += std::exp(logits.at(i, c) - mx);
    total += mx + std::log(z) - logits.at(i, targets[static_cast<std::size_t>(i)]);
  }
  Tensor out = Tensor::scalar(total / count);
  tape.record([il = logits, io = out, targets, mask, n, classes, count]() {
    const double g = io.grad()[0] / count;
    for (int i = 0; i < n; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      double mx = il.at(i, 0);
      for (int c = 1; c < classes; ++c) mx = std::max(mx, il.at(i, c));
      double z = 0.0;
      for (int c = 0; c < classes; ++c) z += std::exp(il.at(i, c) - mx);
      for (int c = 0; c < classes; ++c) {
        const double p = std::exp(il.at(i, c) - mx) / z;
        const double onehot = (c == targets[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        il.grad()[static_cast<std::size_t>(i) * classes + c] += g * (p - onehot);
      }
    }
  });
  return out;
}

}  // namespace vernet
