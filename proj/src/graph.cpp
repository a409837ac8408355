#include "lmsfd/graph.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "lmsfd/errors.hpp"
#include "lmsfd/kernels.hpp"

namespace lmsfd {

Var Tape::leaf(Matrix value, bool requires_grad) {
    auto node = std::make_unique<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return nodes_.back().get();
}

Var Tape::make(Matrix value, std::vector<Node*> parents, std::function<void(Node&)> backward) {
    auto node = std::make_unique<Node>();
    node->grad = Matrix(value.rows(), value.cols());
    node->value = std::move(value);
    for (Node* p : parents) {
        if (p->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    node->parents = std::move(parents);
    if (node->requires_grad) {
        node->backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return nodes_.back().get();
}

void Tape::backward(Var loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1) {
        throw ShapeError("backward: loss must be 1x1, got " + loss->value.shape_str());
    }
    loss->grad(0, 0) = 1.0;
    bool reached_loss = false;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& n = **it;
        if (!reached_loss) {
            // nodes created after the loss cannot feed it
            if (&n != loss) continue;
            reached_loss = true;
        }
        if (n.backward) n.backward(n);
    }
}

Var Binder::bind(Matrix& m) {
    for (const Binding& b : bindings_) {
        if (b.value == &m) return b.node;
    }
    Var node = trainable_ ? tape_->param(m) : tape_->constant(m);
    bindings_.push_back({&m, node});
    return node;
}

namespace {

void check_same_shape(const char* op, Var a, Var b) {
    if (!a->value.same_shape(b->value)) throw_shape_error(op, a->value, b->value);
}

}  // namespace

Var matmul(Tape& t, Var a, Var b, bool trans_a, bool trans_b) {
    Matrix value = mat_mul(a->value, b->value, trans_a, trans_b);
    return t.make(std::move(value), {a, b}, [a, b, trans_a, trans_b](Node& self) {
        const Matrix& g = self.grad;
        if (!trans_a && !trans_b) {
            if (a->requires_grad) mat_mul_acc(a->grad, g, b->value, false, true);
            if (b->requires_grad) mat_mul_acc(b->grad, a->value, g, true, false);
        } else if (trans_a) {
            // value = a^T b
            if (a->requires_grad) mat_mul_acc(a->grad, b->value, g, false, true);
            if (b->requires_grad) mat_mul_acc(b->grad, a->value, g, false, false);
        } else {
            // value = a b^T
            if (a->requires_grad) mat_mul_acc(a->grad, g, b->value, false, false);
            if (b->requires_grad) mat_mul_acc(b->grad, g, a->value, true, false);
        }
    });
}

Var add(Tape& t, Var a, Var b) {
    check_same_shape("add", a, b);
    return t.make(mat_add(a->value, b->value), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) mat_axpy(a->grad, 1.0, self.grad);
        if (b->requires_grad) mat_axpy(b->grad, 1.0, self.grad);
    });
}

Var sub(Tape& t, Var a, Var b) {
    check_same_shape("sub", a, b);
    return t.make(mat_sub(a->value, b->value), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) mat_axpy(a->grad, 1.0, self.grad);
        if (b->requires_grad) mat_axpy(b->grad, -1.0, self.grad);
    });
}

Var add_row_bias(Tape& t, Var a, Var bias) {
    const Matrix& av = a->value;
    const Matrix& bv = bias->value;
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw_shape_error("add_row_bias", av, bv);
    }
    Matrix value = av;
    for (std::size_t i = 0; i < value.rows(); ++i) {
        kernels::active().add(value.row(i), value.row(i), bv.data(), value.cols());
    }
    return t.make(std::move(value), {a, bias}, [a, bias](Node& self) {
        if (a->requires_grad) mat_axpy(a->grad, 1.0, self.grad);
        if (bias->requires_grad) {
            for (std::size_t i = 0; i < self.grad.rows(); ++i) {
                kernels::active().add(bias->grad.data(), bias->grad.data(),
                                      self.grad.row(i), self.grad.cols());
            }
        }
    });
}

Var scale(Tape& t, Var a, double s) {
    return t.make(mat_scale(a->value, s), {a}, [a, s](Node& self) {
        if (a->requires_grad) mat_axpy(a->grad, s, self.grad);
    });
}

Var add_scaled(Tape& t, Var a, Var b, double wa, double wb) {
    check_same_shape("add_scaled", a, b);
    Matrix value = mat_scale(a->value, wa);
    mat_axpy(value, wb, b->value);
    return t.make(std::move(value), {a, b}, [a, b, wa, wb](Node& self) {
        if (a->requires_grad) mat_axpy(a->grad, wa, self.grad);
        if (b->requires_grad) mat_axpy(b->grad, wb, self.grad);
    });
}

Var relu(Tape& t, Var a) {
    Matrix value(a->value.rows(), a->value.cols());
    kernels::active().relu_fwd(value.data(), a->value.data(), value.size());
    return t.make(std::move(value), {a}, [a](Node& self) {
        if (a->requires_grad) {
            kernels::active().relu_bwd_acc(a->grad.data(), a->value.data(),
                                           self.grad.data(), self.grad.size());
        }
    });
}

Var layer_norm(Tape& t, Var a, Var gain, Var bias) {
    const Matrix& x = a->value;
    const std::size_t n = x.cols();
    if (gain->value.rows() != 1 || gain->value.cols() != n) {
        throw_shape_error("layer_norm gain", x, gain->value);
    }
    if (bias->value.rows() != 1 || bias->value.cols() != n) {
        throw_shape_error("layer_norm bias", x, bias->value);
    }
    constexpr double kEps = 1e-5;
    Matrix xhat(x.rows(), n);
    std::vector<double> inv_sigma(x.rows());
    Matrix value(x.rows(), n);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xr = x.row(i);
        double mean = kernels::active().sum(xr, n) / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = xr[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + kEps);
        inv_sigma[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (xr[j] - mean) * is;
            xhat(i, j) = xh;
            value(i, j) = xh * gain->value(0, j) + bias->value(0, j);
        }
    }
    return t.make(std::move(value), {a, gain, bias},
                  [a, gain, bias, xhat = std::move(xhat),
                   inv_sigma = std::move(inv_sigma)](Node& self) {
        const Matrix& g = self.grad;
        const std::size_t n = g.cols();
        std::vector<double> h(n);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            if (gain->requires_grad || bias->requires_grad) {
                for (std::size_t j = 0; j < n; ++j) {
                    gain->grad(0, j) += g(i, j) * xhat(i, j);
                    bias->grad(0, j) += g(i, j);
                }
            }
            if (!a->requires_grad) continue;
            double h_mean = 0.0;
            double hx_mean = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                h[j] = g(i, j) * gain->value(0, j);
                h_mean += h[j];
                hx_mean += h[j] * xhat(i, j);
            }
            h_mean /= static_cast<double>(n);
            hx_mean /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                a->grad(i, j) += (h[j] - h_mean - xhat(i, j) * hx_mean) * inv_sigma[i];
            }
        }
    });
}

namespace {

// Writes row-wise softmax of `x` into `probs`; optionally log-probs too.
void softmax_fill(const Matrix& x, Matrix* probs, Matrix* logp) {
    const std::size_t n = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xr = x.row(i);
        double mx = xr[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(xr[j] - mx);
        const double log_z = std::log(z);
        for (std::size_t j = 0; j < n; ++j) {
            const double lp = xr[j] - mx - log_z;
            if (logp) (*logp)(i, j) = lp;
            if (probs) (*probs)(i, j) = std::exp(lp);
        }
    }
}

}  // namespace

Var softmax_rows(Tape& t, Var a) {
    Matrix probs(a->value.rows(), a->value.cols());
    softmax_fill(a->value, &probs, nullptr);
    return t.make(std::move(probs), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        const Matrix& p = self.value;
        const Matrix& g = self.grad;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            const double s = kernels::active().dot(g.row(i), p.row(i), p.cols());
            for (std::size_t j = 0; j < p.cols(); ++j) {
                a->grad(i, j) += p(i, j) * (g(i, j) - s);
            }
        }
    });
}

Var cross_entropy(Tape& t, Var logits, std::span<const int> targets, int ignore_index) {
    const Matrix& x = logits->value;
    if (targets.size() != x.rows()) {
        std::ostringstream os;
        os << "cross_entropy: " << targets.size() << " targets for " << x.rows() << " rows";
        throw ShapeError(os.str());
    }
    const std::size_t v = x.cols();
    std::vector<int> tgt(targets.begin(), targets.end());
    std::size_t n_kept = 0;
    for (int id : tgt) {
        if (id == ignore_index) continue;
        if (id < 0 || static_cast<std::size_t>(id) >= v) {
            std::ostringstream os;
            os << "cross_entropy: target id " << id << " outside vocabulary of size " << v;
            throw DataError(os.str());
        }
        ++n_kept;
    }
    if (n_kept == 0) {
        throw DataError("cross_entropy: degenerate batch, every position is ignored");
    }
    Matrix probs(x.rows(), v);
    Matrix logp(x.rows(), v);
    softmax_fill(x, &probs, &logp);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (tgt[i] == ignore_index) continue;
        loss -= logp(i, static_cast<std::size_t>(tgt[i]));
    }
    loss /= static_cast<double>(n_kept);
    Matrix value(1, 1);
    value(0, 0) = loss;
    return t.make(std::move(value), {logits},
                  [logits, tgt = std::move(tgt), ignore_index, n_kept,
                   probs = std::move(probs)](Node& self) {
        if (!logits->requires_grad) return;
        const double g = self.grad(0, 0) / static_cast<double>(n_kept);
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            if (tgt[i] == ignore_index) continue;
            for (std::size_t j = 0; j < probs.cols(); ++j) {
                logits->grad(i, j) += g * probs(i, j);
            }
            logits->grad(i, static_cast<std::size_t>(tgt[i])) -= g;
        }
    });
}

Var kl_rows(Tape& t, Var p_logits, Var q_logits, bool detach_p,
            std::span<const unsigned char> row_mask) {
    check_same_shape("kl_rows", p_logits, q_logits);
    const Matrix& px = p_logits->value;
    if (!row_mask.empty() && row_mask.size() != px.rows()) {
        std::ostringstream os;
        os << "kl_rows: mask of length " << row_mask.size() << " for " << px.rows() << " rows";
        throw ShapeError(os.str());
    }
    std::vector<unsigned char> mask(row_mask.begin(), row_mask.end());
    if (mask.empty()) mask.assign(px.rows(), 1);
    std::size_t n_kept = 0;
    for (unsigned char m : mask) n_kept += m ? 1 : 0;
    if (n_kept == 0) {
        throw DataError("kl_rows: degenerate batch, every row is masked out");
    }
    Matrix p_probs(px.rows(), px.cols());
    Matrix p_logp(px.rows(), px.cols());
    Matrix q_probs(px.rows(), px.cols());
    Matrix q_logp(px.rows(), px.cols());
    softmax_fill(px, &p_probs, &p_logp);
    softmax_fill(q_logits->value, &q_probs, &q_logp);
    std::vector<double> row_kl(px.rows(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < px.rows(); ++i) {
        if (!mask[i]) continue;
        double kl = 0.0;
        for (std::size_t j = 0; j < px.cols(); ++j) {
            kl += p_probs(i, j) * (p_logp(i, j) - q_logp(i, j));
        }
        row_kl[i] = kl;
        total += kl;
    }
    Matrix value(1, 1);
    value(0, 0) = total / static_cast<double>(n_kept);

    std::vector<Node*> parents = detach_p ? std::vector<Node*>{q_logits}
                                          : std::vector<Node*>{p_logits, q_logits};
    return t.make(std::move(value), std::move(parents),
                  [p_logits, q_logits, detach_p, mask = std::move(mask), n_kept,
                   p_probs = std::move(p_probs), p_logp = std::move(p_logp),
                   q_probs = std::move(q_probs), q_logp = std::move(q_logp),
                   row_kl = std::move(row_kl)](Node& self) {
        const double g = self.grad(0, 0) / static_cast<double>(n_kept);
        for (std::size_t i = 0; i < p_probs.rows(); ++i) {
            if (!mask[i]) continue;
            if (q_logits->requires_grad) {
                for (std::size_t j = 0; j < p_probs.cols(); ++j) {
                    q_logits->grad(i, j) += g * (q_probs(i, j) - p_probs(i, j));
                }
            }
            if (!detach_p && p_logits->requires_grad) {
                for (std::size_t j = 0; j < p_probs.cols(); ++j) {
                    const double diff = p_logp(i, j) - q_logp(i, j);
                    p_logits->grad(i, j) += g * p_probs(i, j) * (diff - row_kl[i]);
                }
            }
        }
    });
}

Var transpose(Tape& t, Var a) {
    return t.make(mat_transpose(a->value), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                a->grad(j, i) += self.grad(i, j);
            }
        }
    });
}

Var slice_rows(Tape& t, Var a, std::size_t row0, std::size_t n_rows) {
    const Matrix& av = a->value;
    if (row0 + n_rows > av.rows()) {
        std::ostringstream os;
        os << "slice_rows: [" << row0 << ", " << row0 + n_rows << ") out of " << av.rows();
        throw ShapeError(os.str());
    }
    Matrix value(n_rows, av.cols());
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) value(i, j) = av(row0 + i, j);
    }
    return t.make(std::move(value), {a}, [a, row0](Node& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            kernels::active().add(a->grad.row(row0 + i), a->grad.row(row0 + i),
                                  self.grad.row(i), self.grad.cols());
        }
    });
}

Var slice_cols(Tape& t, Var a, std::size_t col0, std::size_t n_cols) {
    const Matrix& av = a->value;
    if (col0 + n_cols > av.cols()) {
        std::ostringstream os;
        os << "slice_cols: [" << col0 << ", " << col0 + n_cols << ") out of " << av.cols();
        throw ShapeError(os.str());
    }
    Matrix value(av.rows(), n_cols);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < n_cols; ++j) value(i, j) = av(i, col0 + j);
    }
    return t.make(std::move(value), {a}, [a, col0](Node& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            for (std::size_t j = 0; j < self.grad.cols(); ++j) {
                a->grad(i, col0 + j) += self.grad(i, j);
            }
        }
    });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no parts");
    const std::size_t cols = parts[0]->value.cols();
    std::size_t rows = 0;
    for (Var p : parts) {
        if (p->value.cols() != cols) throw_shape_error("concat_rows", parts[0]->value, p->value);
        rows += p->value.rows();
    }
    Matrix value(rows, cols);
    std::size_t r = 0;
    for (Var p : parts) {
        for (std::size_t i = 0; i < p->value.rows(); ++i, ++r) {
            for (std::size_t j = 0; j < cols; ++j) value(r, j) = p->value(i, j);
        }
    }
    std::vector<Node*> parents(parts.begin(), parts.end());
    return t.make(std::move(value), parents, [parts = std::move(parents)](Node& self) {
        std::size_t r = 0;
        for (Node* p : parts) {
            if (p->requires_grad) {
                for (std::size_t i = 0; i < p->grad.rows(); ++i) {
                    kernels::active().add(p->grad.row(i), p->grad.row(i),
                                          self.grad.row(r + i), p->grad.cols());
                }
            }
            r += p->grad.rows();
        }
    });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const std::size_t rows = parts[0]->value.rows();
    std::size_t cols = 0;
    for (Var p : parts) {
        if (p->value.rows() != rows) throw_shape_error("concat_cols", parts[0]->value, p->value);
        cols += p->value.cols();
    }
    Matrix value(rows, cols);
    std::size_t c = 0;
    for (Var p : parts) {
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < p->value.cols(); ++j) value(i, c + j) = p->value(i, j);
        }
        c += p->value.cols();
    }
    std::vector<Node*> parents(parts.begin(), parts.end());
    return t.make(std::move(value), parents, [parts = std::move(parents)](Node& self) {
        std::size_t c = 0;
        for (Node* p : parts) {
            if (p->requires_grad) {
                for (std::size_t i = 0; i < p->grad.rows(); ++i) {
                    for (std::size_t j = 0; j < p->grad.cols(); ++j) {
                        p->grad(i, j) += self.grad(i, c + j);
                    }
                }
            }
            c += p->grad.cols();
        }
    });
}

Var gather_rows(Tape& t, Var table, std::span<const int> ids) {
    const Matrix& tv = table->value;
    std::vector<int> idx(ids.begin(), ids.end());
    for (int id : idx) {
        if (id < 0 || static_cast<std::size_t>(id) >= tv.rows()) {
            std::ostringstream os;
            os << "gather_rows: id " << id << " outside table with " << tv.rows() << " rows";
            throw DataError(os.str());
        }
    }
    Matrix value(idx.size(), tv.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < tv.cols(); ++j) {
            value(i, j) = tv(static_cast<std::size_t>(idx[i]), j);
        }
    }
    return t.make(std::move(value), {table}, [table, idx = std::move(idx)](Node& self) {
        if (!table->requires_grad) return;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            kernels::active().add(table->grad.row(static_cast<std::size_t>(idx[i])),
                                  table->grad.row(static_cast<std::size_t>(idx[i])),
                                  self.grad.row(i), self.grad.cols());
        }
    });
}

Var scatter_rows(Tape& t, Var a, std::span<const int> dst, std::size_t n_rows_out) {
    const Matrix& av = a->value;
    if (dst.size() != av.rows()) {
        std::ostringstream os;
        os << "scatter_rows: " << dst.size() << " indices for " << av.rows() << " rows";
        throw ShapeError(os.str());
    }
    std::vector<int> idx(dst.begin(), dst.end());
    Matrix value(n_rows_out, av.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= n_rows_out) {
            throw ShapeError("scatter_rows: destination index out of range");
        }
        for (std::size_t j = 0; j < av.cols(); ++j) {
            value(static_cast<std::size_t>(idx[i]), j) = av(i, j);
        }
    }
    return t.make(std::move(value), {a}, [a, idx = std::move(idx)](Node& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            kernels::active().add(a->grad.row(i), a->grad.row(i),
                                  self.grad.row(static_cast<std::size_t>(idx[i])),
                                  a->grad.cols());
        }
    });
}

Var select_per_row(Tape& t, Var a, std::span<const int> cols) {
    const Matrix& av = a->value;
    if (cols.size() != av.rows()) {
        std::ostringstream os;
        os << "select_per_row: " << cols.size() << " indices for " << av.rows() << " rows";
        throw ShapeError(os.str());
    }
    std::vector<int> idx(cols.begin(), cols.end());
    Matrix value(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        value(i, 0) = av(i, static_cast<std::size_t>(idx[i]));
    }
    return t.make(std::move(value), {a}, [a, idx = std::move(idx)](Node& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            a->grad(i, static_cast<std::size_t>(idx[i])) += self.grad(i, 0);
        }
    });
}

Var mul_col_broadcast(Tape& t, Var a, Var s) {
    const Matrix& av = a->value;
    const Matrix& sv = s->value;
    if (sv.rows() != av.rows() || sv.cols() != 1) {
        throw_shape_error("mul_col_broadcast", av, sv);
    }
    Matrix value(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        kernels::active().scale(value.row(i), av.row(i), sv(i, 0), av.cols());
    }
    return t.make(std::move(value), {a, s}, [a, s](Node& self) {
        for (std::size_t i = 0; i < self.grad.rows(); ++i) {
            if (a->requires_grad) {
                kernels::active().axpy(a->grad.row(i), s->value(i, 0), self.grad.row(i),
                                       self.grad.cols());
            }
            if (s->requires_grad) {
                s->grad(i, 0) += kernels::active().dot(self.grad.row(i), a->value.row(i),
                                                       self.grad.cols());
            }
        }
    });
}

Var sum_all(Tape& t, Var a) {
    Matrix value(1, 1);
    value(0, 0) = mat_sum(a->value);
    return t.make(std::move(value), {a}, [a](Node& self) {
        if (!a->requires_grad) return;
        const double g = self.grad(0, 0);
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad.data()[i] += g;
    });
}

Var detach(Tape& t, Var a) {
    return t.constant(a->value);
}

}  // namespace lmsfd
