#include "vascufold/model/autodiff.hpp"

#include <cassert>
#include <cmath>

#include "vascufold/core/errors.hpp"
#include "vascufold/core/kernels.hpp"

namespace vf {

void Tape::backward(int loss_id) {
    if (val(loss_id).size() != 1) throw InternalError("backward: loss must be a scalar");
    grad(loss_id)[0] = 1.0;
    for (int i = loss_id; i >= 0; --i) {
        auto& n = nodes_[static_cast<size_t>(i)];
        if (n.back && !n.grad.empty()) n.back(*this, i);
    }
}

int constant(Tape& t, Tensor v) { return t.add(std::move(v)); }

namespace {

Tensor transposed(const Tensor& a) {
    Tensor out({a.dim(1), a.dim(0)});
    for (int64_t i = 0; i < a.dim(0); ++i)
        for (int64_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

}  // namespace

int matmul(Tape& t, int a, int b) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
        throw ShapeError("matmul: incompatible dims " + Tensor::dims_str(av.dims()) + " x " +
                         Tensor::dims_str(bv.dims()));
    int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor c({m, n});
    kernels::matmul(av.data(), bv.data(), c.data(), static_cast<size_t>(m),
                    static_cast<size_t>(k), static_cast<size_t>(n));
    return t.add(std::move(c), [a, b, m, k, n](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        // dA += g * B^T ; dB += A^T * g
        Tensor bt = transposed(tp.val(b));
        kernels::matmul(g.data(), bt.data(), tp.grad(a).data(), static_cast<size_t>(m),
                        static_cast<size_t>(n), static_cast<size_t>(k), true);
        Tensor at = transposed(tp.val(a));
        kernels::matmul(at.data(), g.data(), tp.grad(b).data(), static_cast<size_t>(k),
                        static_cast<size_t>(m), static_cast<size_t>(n), true);
    });
}

int add(Tape& t, int a, int b) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    if (!av.same_dims(bv)) throw ShapeError("add: dims differ");
    Tensor c = av;
    kernels::vadd(bv.data(), c.data(), static_cast<size_t>(c.size()));
    return t.add(std::move(c), [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        kernels::vadd(g.data(), tp.grad(a).data(), static_cast<size_t>(g.size()));
        kernels::vadd(g.data(), tp.grad(b).data(), static_cast<size_t>(g.size()));
    });
}

int add_bias(Tape& t, int a, int bias) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(bias);
    if (av.rank() != 2 || bv.size() != av.dim(1)) throw ShapeError("add_bias: dims differ");
    Tensor c = av;
    int64_t m = av.dim(0), n = av.dim(1);
    for (int64_t i = 0; i < m; ++i)
        kernels::vadd(bv.data(), c.data() + i * n, static_cast<size_t>(n));
    return t.add(std::move(c), [a, bias, m, n](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        kernels::vadd(g.data(), tp.grad(a).data(), static_cast<size_t>(g.size()));
        Tensor& gb = tp.grad(bias);
        for (int64_t i = 0; i < m; ++i)
            kernels::vadd(g.data() + i * n, gb.data(), static_cast<size_t>(n));
    });
}

int scale_const(Tape& t, int a, double s) {
    Tensor c = t.val(a);
    kernels::scale(s, c.data(), static_cast<size_t>(c.size()));
    return t.add(std::move(c), [a, s](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        kernels::axpy(s, g.data(), tp.grad(a).data(), static_cast<size_t>(g.size()));
    });
}

int scale_by(Tape& t, int a, int scalar_param) {
    const Tensor& sv = t.val(scalar_param);
    if (sv.size() != 1) throw ShapeError("scale_by: gate must be a scalar");
    double s = sv[0];
    Tensor c = t.val(a);
    kernels::scale(s, c.data(), static_cast<size_t>(c.size()));
    return t.add(std::move(c), [a, scalar_param, s](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        kernels::axpy(s, g.data(), tp.grad(a).data(), static_cast<size_t>(g.size()));
        tp.grad(scalar_param)[0] +=
            kernels::dot(g.data(), tp.val(a).data(), static_cast<size_t>(g.size()));
    });
}

int transpose2d(Tape& t, int a) {
    const Tensor& av = t.val(a);
    if (av.rank() != 2) throw ShapeError("transpose2d: rank must be 2");
    return t.add(transposed(av), [a](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t i = 0; i < g.dim(0); ++i)
            for (int64_t j = 0; j < g.dim(1); ++j) ga.at(j, i) += g.at(i, j);
    });
}

int slice_cols(Tape& t, int a, int64_t c0, int64_t c1) {
    const Tensor& av = t.val(a);
    int64_t m = av.dim(0), w = c1 - c0;
    Tensor c({m, w});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < w; ++j) c.at(i, j) = av.at(i, c0 + j);
    return t.add(std::move(c), [a, c0, w, m](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < w; ++j) ga.at(i, c0 + j) += g.at(i, j);
    });
}

int concat_cols(Tape& t, const std::vector<int>& parts) {
    int64_t m = t.val(parts[0]).dim(0), total = 0;
    for (int p : parts) total += t.val(p).dim(1);
    Tensor c({m, total});
    int64_t off = 0;
    for (int p : parts) {
        const Tensor& pv = t.val(p);
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < pv.dim(1); ++j) c.at(i, off + j) = pv.at(i, j);
        off += pv.dim(1);
    }
    return t.add(std::move(c), [parts, m](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        int64_t off = 0;
        for (int p : parts) {
            Tensor& gp = tp.grad(p);
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < gp.dim(1); ++j) gp.at(i, j) += g.at(i, off + j);
            off += gp.dim(1);
        }
    });
}

int layer_norm(Tape& t, int a, int gamma, int beta) {
    const Tensor& av = t.val(a);
    int64_t m = av.dim(0), n = av.dim(1);
    const double eps = 1e-6;
    Tensor out({m, n});
    Tensor xhat({m, n});
    std::vector<double> inv_sd(static_cast<size_t>(m));
    const Tensor& gv = t.val(gamma);
    const Tensor& bv = t.val(beta);
    for (int64_t i = 0; i < m; ++i) {
        const double* row = av.data() + i * n;
        double mean = kernels::sum(row, static_cast<size_t>(n)) / n;
        double var = 0;
        for (int64_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= n;
        double isd = 1.0 / std::sqrt(var + eps);
        inv_sd[static_cast<size_t>(i)] = isd;
        for (int64_t j = 0; j < n; ++j) {
            double xh = (row[j] - mean) * isd;
            xhat.at(i, j) = xh;
            out.at(i, j) = xh * gv[j] + bv[j];
        }
    }
    return t.add(std::move(out),
                 [a, gamma, beta, m, n, xhat = std::move(xhat),
                  inv_sd = std::move(inv_sd)](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& gv = tp.val(gamma);
        Tensor& ga = tp.grad(a);
        Tensor& gg = tp.grad(gamma);
        Tensor& gb = tp.grad(beta);
        for (int64_t i = 0; i < m; ++i) {
            double sum_gy = 0, sum_gy_xhat = 0;
            for (int64_t j = 0; j < n; ++j) {
                double gy = g.at(i, j) * gv[j];
                sum_gy += gy;
                sum_gy_xhat += gy * xhat.at(i, j);
                gg[j] += g.at(i, j) * xhat.at(i, j);
                gb[j] += g.at(i, j);
            }
            double isd = inv_sd[static_cast<size_t>(i)];
            for (int64_t j = 0; j < n; ++j) {
                double gy = g.at(i, j) * gv[j];
                ga.at(i, j) +=
                    isd * (gy - sum_gy / n - xhat.at(i, j) * sum_gy_xhat / n);
            }
        }
    });
}

int gelu(Tape& t, int a) {
    const Tensor& av = t.val(a);
    Tensor out(av.dims());
    const double inv_sqrt2 = 0.70710678118654752440;
    for (int64_t i = 0; i < av.size(); ++i)
        out[i] = 0.5 * av[i] * (1.0 + std::erf(av[i] * inv_sqrt2));
    return t.add(std::move(out), [a, inv_sqrt2](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.val(a);
        Tensor& ga = tp.grad(a);
        const double inv_sqrt2pi = 0.39894228040143267794;
        for (int64_t i = 0; i < x.size(); ++i) {
            double phi = 0.5 * (1.0 + std::erf(x[i] * inv_sqrt2));
            double pdf = inv_sqrt2pi * std::exp(-0.5 * x[i] * x[i]);
            ga[i] += g[i] * (phi + x[i] * pdf);
        }
    });
}

int softmax_rows(Tape& t, int a) {
    const Tensor& av = t.val(a);
    int64_t m = av.dim(0), n = av.dim(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        const double* row = av.data() + i * n;
        double mx = row[0];
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double* orow = out.data() + i * n;
        for (int64_t j = 0; j < n; ++j) orow[j] = row[j] - mx;
        kernels::vexp(orow, orow, static_cast<size_t>(n));
        double s = kernels::sum(orow, static_cast<size_t>(n));
        kernels::scale(1.0 / s, orow, static_cast<size_t>(n));
        assert(std::abs(kernels::sum(orow, static_cast<size_t>(n)) - 1.0) < 1e-9);
    }
    return t.add(std::move(out), [a, m, n](Tape& tp, int self) {
        const Tensor& y = tp.val(self);
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t i = 0; i < m; ++i) {
            const double* yr = y.data() + i * n;
            const double* gr = g.data() + i * n;
            double dot = kernels::dot(yr, gr, static_cast<size_t>(n));
            double* gar = ga.data() + i * n;
            for (int64_t j = 0; j < n; ++j) gar[j] += yr[j] * (gr[j] - dot);
        }
    });
}

int sigmoid(Tape& t, int a) {
    const Tensor& av = t.val(a);
    Tensor out(av.dims());
    // sigmoid(x) = 1/(1+exp(-x)); vexp on -x
    for (int64_t i = 0; i < av.size(); ++i) out[i] = -av[i];
    kernels::vexp(out.data(), out.data(), static_cast<size_t>(out.size()));
    for (int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + out[i]);
    return t.add(std::move(out), [a](Tape& tp, int self) {
        const Tensor& y = tp.val(self);
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t i = 0; i < y.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

int reshape(Tape& t, int a, std::vector<int64_t> dims) {
    const Tensor& av = t.val(a);
    Tensor out(dims);
    if (out.size() != av.size()) throw ShapeError("reshape: element count differs");
    std::copy(av.data(), av.data() + av.size(), out.data());
    return t.add(std::move(out), [a](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        kernels::vadd(g.data(), ga.data(), static_cast<size_t>(g.size()));
    });
}

int avgpool3d(Tape& t, int a, int stride) {
    const Tensor& av = t.val(a);
    int64_t d = av.dim(0), h = av.dim(1), w = av.dim(2), ch = av.dim(3);
    int64_t od = d / stride, oh = h / stride, ow = w / stride;
    Tensor out({od, oh, ow, ch}, 0.0);
    double inv = 1.0 / (static_cast<double>(stride) * stride * stride);
    for (int64_t z = 0; z < d; ++z)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                const double* src = &av.at(z, y, x * ch);
                double* dst = &out.at(z / stride, y / stride, (x / stride) * ch);
                kernels::axpy(inv, src, dst, static_cast<size_t>(ch));
            }
    return t.add(std::move(out), [a, d, h, w, ch, stride, inv](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t z = 0; z < d; ++z)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const double* src = &g.at(z / stride, y / stride, (x / stride) * ch);
                    double* dst = &ga.at(z, y, x * ch);
                    kernels::axpy(inv, src, dst, static_cast<size_t>(ch));
                }
    });
}

int upsample_nearest3d(Tape& t, int a, int factor) {
    const Tensor& av = t.val(a);
    int64_t d = av.dim(0), h = av.dim(1), w = av.dim(2), ch = av.dim(3);
    Tensor out({d * factor, h * factor, w * factor, ch});
    for (int64_t z = 0; z < d * factor; ++z)
        for (int64_t y = 0; y < h * factor; ++y)
            for (int64_t x = 0; x < w * factor; ++x)
                std::copy(&av.at(z / factor, y / factor, (x / factor) * ch),
                          &av.at(z / factor, y / factor, (x / factor) * ch) + ch,
                          &out.at(z, y, x * ch));
    return t.add(std::move(out), [a, d, h, w, ch, factor](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t z = 0; z < d * factor; ++z)
            for (int64_t y = 0; y < h * factor; ++y)
                for (int64_t x = 0; x < w * factor; ++x)
                    kernels::vadd(&g.at(z, y, x * ch),
                                  &ga.at(z / factor, y / factor, (x / factor) * ch),
                                  static_cast<size_t>(ch));
    });
}

namespace {

struct LinW {
    int64_t i0, i1;
    double w0, w1;
};

// align_corners=false sampling for a fixed 2x factor
std::vector<LinW> linear_weights_2x(int64_t out_n, int64_t in_n) {
    std::vector<LinW> ws(static_cast<size_t>(out_n));
    for (int64_t o = 0; o < out_n; ++o) {
        double s = (o + 0.5) / 2.0 - 0.5;
        double fl = std::floor(s);
        int64_t i0 = static_cast<int64_t>(fl);
        double f = s - fl;
        int64_t i1 = i0 + 1;
        i0 = std::clamp<int64_t>(i0, 0, in_n - 1);
        i1 = std::clamp<int64_t>(i1, 0, in_n - 1);
        ws[static_cast<size_t>(o)] = {i0, i1, 1.0 - f, f};
    }
    return ws;
}

}  // namespace

int upsample_trilinear3d(Tape& t, int a) {
    const Tensor& av = t.val(a);
    int64_t d = av.dim(0), h = av.dim(1), w = av.dim(2), ch = av.dim(3);
    int64_t od = d * 2, oh = h * 2, ow = w * 2;
    auto wz = linear_weights_2x(od, d), wy = linear_weights_2x(oh, h),
         wx = linear_weights_2x(ow, w);
    Tensor out({od, oh, ow, ch}, 0.0);
    for (int64_t z = 0; z < od; ++z)
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t x = 0; x < ow; ++x) {
                const auto& az = wz[static_cast<size_t>(z)];
                const auto& ay = wy[static_cast<size_t>(y)];
                const auto& ax = wx[static_cast<size_t>(x)];
                double* dst = &out.at(z, y, x * ch);
                for (int cz = 0; cz < 2; ++cz)
                    for (int cy = 0; cy < 2; ++cy)
                        for (int cx = 0; cx < 2; ++cx) {
                            double wgt = (cz ? az.w1 : az.w0) * (cy ? ay.w1 : ay.w0) *
                                         (cx ? ax.w1 : ax.w0);
                            if (wgt == 0.0) continue;
                            const double* src = &av.at(cz ? az.i1 : az.i0, cy ? ay.i1 : ay.i0,
                                                       (cx ? ax.i1 : ax.i0) * ch);
                            kernels::axpy(wgt, src, dst, static_cast<size_t>(ch));
                        }
            }
    return t.add(std::move(out), [a, d, h, w, ch, od, oh, ow](Tape& tp, int self) {
        auto wz = linear_weights_2x(od, d), wy = linear_weights_2x(oh, h),
             wx = linear_weights_2x(ow, w);
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (int64_t z = 0; z < od; ++z)
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t x = 0; x < ow; ++x) {
                    const auto& az = wz[static_cast<size_t>(z)];
                    const auto& ay = wy[static_cast<size_t>(y)];
                    const auto& ax = wx[static_cast<size_t>(x)];
                    const double* src = &g.at(z, y, x * ch);
                    for (int cz = 0; cz < 2; ++cz)
                        for (int cy = 0; cy < 2; ++cy)
                            for (int cx = 0; cx < 2; ++cx) {
                                double wgt = (cz ? az.w1 : az.w0) * (cy ? ay.w1 : ay.w0) *
                                             (cx ? ax.w1 : ax.w0);
                                if (wgt == 0.0) continue;
                                double* dst = &ga.at(cz ? az.i1 : az.i0, cy ? ay.i1 : ay.i0,
                                                     (cx ? ax.i1 : ax.i0) * ch);
                                kernels::axpy(wgt, src, dst, static_cast<size_t>(ch));
                            }
                }
    });
}

int im2col3x3x3(Tape& t, int a) {
    const Tensor& av = t.val(a);
    int64_t d = av.dim(0), h = av.dim(1), w = av.dim(2), ch = av.dim(3);
    Tensor out({d * h * w, 27 * ch}, 0.0);
    int64_t row = 0;
    for (int64_t z = 0; z < d; ++z)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x, ++row) {
                double* dst = out.data() + row * 27 * ch;
                int tap = 0;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx, ++tap) {
                            int64_t zz = z + dz, yy = y + dy, xx = x + dx;
                            if (zz < 0 || zz >= d || yy < 0 || yy >= h || xx < 0 || xx >= w)
                                continue;
                            std::copy(&av.at(zz, yy, xx * ch), &av.at(zz, yy, xx * ch) + ch,
                                      dst + tap * ch);
                        }
            }
    return t.add(std::move(out), [a, d, h, w, ch](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        int64_t row = 0;
        for (int64_t z = 0; z < d; ++z)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x, ++row) {
                    const double* src = g.data() + row * 27 * ch;
                    int tap = 0;
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx, ++tap) {
                                int64_t zz = z + dz, yy = y + dy, xx = x + dx;
                                if (zz < 0 || zz >= d || yy < 0 || yy >= h || xx < 0 ||
                                    xx >= w)
                                    continue;
                                kernels::vadd(src + tap * ch, &ga.at(zz, yy, xx * ch),
                                              static_cast<size_t>(ch));
                            }
                }
    });
}

int sum_all(Tape& t, int a) {
    const Tensor& av = t.val(a);
    Tensor out({1});
    out[0] = kernels::sum(av.data(), static_cast<size_t>(av.size()));
    return t.add(std::move(out), [a](Tape& tp, int self) {
        double g = tp.grad(self)[0];
        Tensor& ga = tp.grad(a);
        for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

int dot_const(Tape& t, int a, const Tensor& wgt) {
    const Tensor& av = t.val(a);
    if (av.size() != wgt.size()) throw ShapeError("dot_const: size mismatch");
    Tensor out({1});
    out[0] = kernels::dot(av.data(), wgt.data(), static_cast<size_t>(av.size()));
    return t.add(std::move(out), [a, wgt](Tape& tp, int self) {
        double g = tp.grad(self)[0];
        kernels::axpy(g, wgt.data(), tp.grad(a).data(), static_cast<size_t>(wgt.size()));
    });
}

int s_add(Tape& t, int a, int b) {
    Tensor out({1});
    out[0] = t.val(a)[0] + t.val(b)[0];
    return t.add(std::move(out), [a, b](Tape& tp, int self) {
        tp.grad(a)[0] += tp.grad(self)[0];
        tp.grad(b)[0] += tp.grad(self)[0];
    });
}

int s_sub(Tape& t, int a, int b) {
    Tensor out({1});
    out[0] = t.val(a)[0] - t.val(b)[0];
    return t.add(std::move(out), [a, b](Tape& tp, int self) {
        tp.grad(a)[0] += tp.grad(self)[0];
        tp.grad(b)[0] -= tp.grad(self)[0];
    });
}

int s_div(Tape& t, int a, int b) {
    Tensor out({1});
    out[0] = t.val(a)[0] / t.val(b)[0];
    return t.add(std::move(out), [a, b](Tape& tp, int self) {
        double bv = tp.val(b)[0];
        double g = tp.grad(self)[0];
        tp.grad(a)[0] += g / bv;
        tp.grad(b)[0] -= g * tp.val(a)[0] / (bv * bv);
    });
}

int s_add_const(Tape& t, int a, double c) {
    Tensor out({1});
    out[0] = t.val(a)[0] + c;
    return t.add(std::move(out),
                 [a](Tape& tp, int self) { tp.grad(a)[0] += tp.grad(self)[0]; });
}

int s_scale(Tape& t, int a, double c) {
    Tensor out({1});
    out[0] = t.val(a)[0] * c;
    return t.add(std::move(out),
                 [a, c](Tape& tp, int self) { tp.grad(a)[0] += c * tp.grad(self)[0]; });
}

int bce_with_logits_mean(Tape& t, int logits, const Tensor& target) {
    const Tensor& z = t.val(logits);
    if (z.size() != target.size()) throw ShapeError("bce: size mismatch");
    // mean( max(z,0) - z*t + log1p(exp(-|z|)) )
    double acc = 0.0;
    for (int64_t i = 0; i < z.size(); ++i)
        acc += std::max(z[i], 0.0) - z[i] * target[i] + std::log1p(std::exp(-std::abs(z[i])));
    Tensor out({1});
    double inv_n = 1.0 / static_cast<double>(z.size());
    out[0] = acc * inv_n;
    return t.add(std::move(out), [logits, target, inv_n](Tape& tp, int self) {
        double g = tp.grad(self)[0] * inv_n;
        const Tensor& z = tp.val(logits);
        Tensor& gz = tp.grad(logits);
        for (int64_t i = 0; i < z.size(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-z[i]));
            gz[i] += g * (s - target[i]);
        }
    });
}

}  // namespace vf
