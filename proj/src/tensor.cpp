#include "abbie/tensor.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace abbie {

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kShape: return "shape";
        case ErrorKind::kConfig: return "config";
        case ErrorKind::kData: return "data";
        case ErrorKind::kUsage: return "usage";
        case ErrorKind::kFormat: return "format";
        case ErrorKind::kNumerics: return "numerics";
        case ErrorKind::kIo: return "io";
    }
    return "unknown";
}

#ifdef NDEBUG
static std::atomic<bool> g_finite_checks{false};
#else
static std::atomic<bool> g_finite_checks{true};
#endif

bool finite_checks_enabled() { return g_finite_checks.load(std::memory_order_relaxed); }
void set_finite_checks(bool on) { g_finite_checks.store(on, std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// Worker pool. Lane ranges are a pure function of the work size, and every
// output element is produced by exactly one lane with a fixed reduction order,
// so the lane count never changes results.
// ---------------------------------------------------------------------------

namespace {

class Pool {
public:
    static Pool& get() {
        static Pool p;
        return p;
    }

    int lanes() const { return lanes_; }

    void run(const std::function<void(int)>& fn) {
        if (lanes_ == 1) {
            fn(0);
            return;
        }
        {
            std::unique_lock<std::mutex> lk(m_);
            job_ = &fn;
            pending_ = lanes_ - 1;
            ++generation_;
        }
        cv_.notify_all();
        fn(0);
        std::unique_lock<std::mutex> lk(m_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    Pool() {
        const char* env = std::getenv("ABBIE_THREADS");
        int n = env ? std::atoi(env) : static_cast<int>(std::thread::hardware_concurrency());
        lanes_ = n > 0 ? n : 1;
        for (int i = 1; i < lanes_; ++i) {
            workers_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lk(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    void worker_loop(int lane) {
        uint64_t seen = 0;
        for (;;) {
            const std::function<void(int)>* job = nullptr;
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                job = job_;
            }
            (*job)(lane);
            {
                std::unique_lock<std::mutex> lk(m_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex m_;
    std::condition_variable cv_, done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(int)>* job_ = nullptr;
    uint64_t generation_ = 0;
    int pending_ = 0;
    int lanes_ = 1;
    bool stop_ = false;
};

// Partition [0, n) into per-lane ranges aligned to `align` so block membership
// of each row is independent of the lane count.
inline std::pair<int64_t, int64_t> lane_range(int64_t n, int64_t align, int lane, int lanes) {
    int64_t blocks = (n + align - 1) / align;
    int64_t per = blocks / lanes, extra = blocks % lanes;
    int64_t b0 = lane * per + std::min<int64_t>(lane, extra);
    int64_t b1 = b0 + per + (lane < extra ? 1 : 0);
    return {std::min(b0 * align, n), std::min(b1 * align, n)};
}

}  // namespace

int thread_lanes() { return Pool::get().lanes(); }

// ---------------------------------------------------------------------------
// gemm kernels. Register-blocked MR x NR tiles; the k loop stays innermost
// over each accumulator, so c[i][j] always sums a[i][k]*b[k][j] for k
// ascending. Tails fall back to the single-row path, membership fixed by the
// row index alone.
// ---------------------------------------------------------------------------

namespace {

template <class S>
inline void gemm_row(const S* __restrict a, const S* __restrict b, S* __restrict c,
                     int64_t k_dim, int64_t n) {
    for (int64_t k = 0; k < k_dim; ++k) {
        const S av = a[k];
        const S* __restrict br = b + k * n;
        for (int64_t j = 0; j < n; ++j) c[j] += av * br[j];
    }
}

template <class S>
void gemm_rows(const S* a, const S* b, S* c, int64_t i0, int64_t i1, int64_t k_dim, int64_t n) {
    constexpr int64_t MR = 4;
    constexpr int64_t NR = sizeof(S) == 4 ? 16 : 8;
    int64_t i = i0;
    for (; i + MR <= i1; i += MR) {
        const S* a0 = a + i * k_dim;
        const S* a1 = a0 + k_dim;
        const S* a2 = a1 + k_dim;
        const S* a3 = a2 + k_dim;
        S* c0 = c + i * n;
        S* c1 = c0 + n;
        S* c2 = c1 + n;
        S* c3 = c2 + n;
        int64_t j = 0;
        for (; j + NR <= n; j += NR) {
            S acc0[NR], acc1[NR], acc2[NR], acc3[NR];
            for (int64_t u = 0; u < NR; ++u) {
                acc0[u] = c0[j + u];
                acc1[u] = c1[j + u];
                acc2[u] = c2[j + u];
                acc3[u] = c3[j + u];
            }
            for (int64_t k = 0; k < k_dim; ++k) {
                const S v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
                const S* __restrict br = b + k * n + j;
                for (int64_t u = 0; u < NR; ++u) {
                    acc0[u] += v0 * br[u];
                    acc1[u] += v1 * br[u];
                    acc2[u] += v2 * br[u];
                    acc3[u] += v3 * br[u];
                }
            }
            for (int64_t u = 0; u < NR; ++u) {
                c0[j + u] = acc0[u];
                c1[j + u] = acc1[u];
                c2[j + u] = acc2[u];
                c3[j + u] = acc3[u];
            }
        }
        for (; j < n; ++j) {
            S acc0 = c0[j], acc1 = c1[j], acc2 = c2[j], acc3 = c3[j];
            for (int64_t k = 0; k < k_dim; ++k) {
                const S bv = b[k * n + j];
                acc0 += a0[k] * bv;
                acc1 += a1[k] * bv;
                acc2 += a2[k] * bv;
                acc3 += a3[k] * bv;
            }
            c0[j] = acc0;
            c1[j] = acc1;
            c2[j] = acc2;
            c3[j] = acc3;
        }
    }
    for (; i < i1; ++i) gemm_row(a + i * k_dim, b, c + i * n, k_dim, n);
}

// db[k,n] += sum_m a[m,k] * dc[m,n], m accumulated in ascending order.
// Equivalent to A^T * dC without materializing the transpose.
template <class S>
void gemm_at_rows(const S* a, const S* dc, S* db, int64_t k0, int64_t k1,
                  int64_t m_dim, int64_t k_dim, int64_t n) {
    for (int64_t m = 0; m < m_dim; ++m) {
        const S* __restrict ar = a + m * k_dim;
        const S* __restrict dr = dc + m * n;
        for (int64_t k = k0; k < k1; ++k) {
            const S av = ar[k];
            S* __restrict out = db + k * n;
            for (int64_t j = 0; j < n; ++j) out[j] += av * dr[j];
        }
    }
}

template <class S>
void transpose2d(const S* src, S* dst, int64_t rows, int64_t cols) {
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

constexpr int64_t kRowAlign = 4;

}  // namespace

template <class S>
void gemm_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    Pool& pool = Pool::get();
    if (m < 2 * kRowAlign || pool.lanes() == 1) {
        gemm_rows(a, b, c, 0, m, k, n);
        return;
    }
    pool.run([&](int lane) {
        auto [i0, i1] = lane_range(m, kRowAlign, lane, pool.lanes());
        if (i0 < i1) gemm_rows(a, b, c, i0, i1, k, n);
    });
}

template void gemm_acc<float>(const float*, const float*, float*, int64_t, int64_t, int64_t);
template void gemm_acc<double>(const double*, const double*, double*, int64_t, int64_t, int64_t);

namespace {

template <class S>
void gemm_at_acc(const S* a, const S* dc, S* db, int64_t m, int64_t k, int64_t n) {
    Pool& pool = Pool::get();
    if (k < 2 || pool.lanes() == 1) {
        gemm_at_rows(a, dc, db, 0, k, m, k, n);
        return;
    }
    pool.run([&](int lane) {
        auto [k0, k1] = lane_range(k, 1, lane, pool.lanes());
        if (k0 < k1) gemm_at_rows(a, dc, db, k0, k1, m, k, n);
    });
}

// Runs fn(batch_index) over [0, count) partitioned across lanes.
void parallel_batches(int64_t count, const std::function<void(int64_t)>& fn) {
    Pool& pool = Pool::get();
    if (count < 2 || pool.lanes() == 1) {
        for (int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    pool.run([&](int lane) {
        auto [b0, b1] = lane_range(count, 1, lane, pool.lanes());
        for (int64_t i = b0; i < b1; ++i) fn(i);
    });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

template <class S>
TensorT<S>::TensorT(Shape shape, std::vector<S> values)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<S>>(std::move(values))) {
    if (numel(shape_) != static_cast<int64_t>(data_->size()))
        throw ShapeError("tensor data length " + std::to_string(data_->size()) +
                         " does not match shape " + shape_str(shape_));
}

template <class S>
TensorT<S> TensorT<S>::full(Shape shape, S v) {
    TensorT t(std::move(shape));
    for (auto& x : t.values()) x = v;
    return t;
}

template <class S>
void check_finite(const TensorT<S>& t, const char* op) {
    for (const S& v : t.values()) {
        if (!std::isfinite(v))
            throw NumericsError(std::string(op) + ": non-finite value produced");
    }
}

namespace {

template <class S>
DiffTape<S>* tape_of(std::initializer_list<const TensorT<S>*> inputs) {
    DiffTape<S>* t = nullptr;
    for (const auto* x : inputs) {
        if (x->tape()) {
            if (t && t != x->tape()) throw UsageError("operands recorded on different tapes");
            t = x->tape();
        }
    }
    return t;
}

template <class S>
TensorT<S> finish_op(const char* op, TensorT<S> out, DiffTape<S>* tape,
                     typename DiffTape<S>::BackFn back) {
    if (finite_checks_enabled()) check_finite(out, op);
    if (!tape) return out;
    return tape->record(op, std::move(out), std::move(back));
}

template <class S>
void accumulate(std::vector<S>& dst, const std::vector<S>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// DiffTape
// ---------------------------------------------------------------------------

template <class S>
void DiffTape<S>::backward(const TensorT<S>& loss) {
    if (loss.tape() != this) throw UsageError("backward: loss is not recorded on this tape");
    if (numel(loss.shape()) != 1) throw UsageError("backward: loss must be a scalar");
    grad_buffer(loss.node())[0] = S(1);
    for (int64_t i = static_cast<int64_t>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (!n.back || n.grad.empty()) continue;
        n.back(*this, n.grad);
        // Node fully propagated: release its activation captures and buffer.
        n.back = nullptr;
        std::vector<S>().swap(n.grad);
    }
}

template <class S>
TensorT<S> DiffTape<S>::grad(const TensorT<S>& t) const {
    if (t.tape() != this) throw UsageError("grad: tensor is not recorded on this tape");
    const Node& n = nodes_[static_cast<size_t>(t.node())];
    if (n.grad.empty()) return TensorT<S>(t.shape());
    return TensorT<S>(t.shape(), n.grad);
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

namespace {

struct MmPlan {
    int64_t m, k, n;
    int64_t batch;
    Shape out_shape;
    std::vector<int64_t> a_base, b_base;  // element offsets per batch product
    bool flat;                            // b is a plain matrix: one fused gemm
    int64_t flat_m;
};

MmPlan plan_matmul(const Shape& as, const Shape& bs) {
    if (as.size() < 2 || bs.size() < 2)
        throw ShapeError("matmul needs 2-d or higher operands: " + shape_str(as) + " x " + shape_str(bs));
    MmPlan p;
    p.m = as[as.size() - 2];
    p.k = as[as.size() - 1];
    p.n = bs[bs.size() - 1];
    if (bs[bs.size() - 2] != p.k)
        throw ShapeError("matmul inner dims mismatch: " + shape_str(as) + " x " + shape_str(bs));

    const size_t la = as.size() - 2, lb = bs.size() - 2;
    if (lb == 0) {
        p.flat = true;
        p.batch = 1;
        p.flat_m = p.m;
        for (size_t i = 0; i < la; ++i) p.flat_m *= as[i];
        p.out_shape.assign(as.begin(), as.end() - 1);
        p.out_shape.push_back(p.n);
        return p;
    }

    const size_t L = std::max(la, lb);
    Shape batch_shape(L);
    for (size_t i = 0; i < L; ++i) {
        int64_t da = i < L - la ? 1 : as[i - (L - la)];
        int64_t db = i < L - lb ? 1 : bs[i - (L - lb)];
        if (da != db && da != 1 && db != 1)
            throw ShapeError("matmul batch dims not broadcastable: " + shape_str(as) + " x " + shape_str(bs));
        batch_shape[i] = std::max(da, db);
    }
    p.flat = false;
    p.flat_m = p.m;
    p.batch = numel(batch_shape);
    p.out_shape = batch_shape;
    p.out_shape.push_back(p.m);
    p.out_shape.push_back(p.n);

    // Per-operand strides over the broadcast batch space (0 on broadcast dims).
    std::vector<int64_t> sa(L, 0), sb(L, 0);
    int64_t acc_a = p.m * p.k, acc_b = p.k * p.n;
    for (size_t i = L; i-- > 0;) {
        int64_t da = i < L - la ? 1 : as[i - (L - la)];
        int64_t db = i < L - lb ? 1 : bs[i - (L - lb)];
        sa[i] = (da == 1 && batch_shape[i] > 1) || i < L - la ? 0 : acc_a;
        sb[i] = (db == 1 && batch_shape[i] > 1) || i < L - lb ? 0 : acc_b;
        if (i >= L - la) acc_a *= da;
        if (i >= L - lb) acc_b *= db;
    }
    p.a_base.resize(static_cast<size_t>(p.batch));
    p.b_base.resize(static_cast<size_t>(p.batch));
    std::vector<int64_t> idx(L, 0);
    for (int64_t bi = 0; bi < p.batch; ++bi) {
        int64_t oa = 0, ob = 0;
        for (size_t i = 0; i < L; ++i) {
            oa += idx[i] * sa[i];
            ob += idx[i] * sb[i];
        }
        p.a_base[static_cast<size_t>(bi)] = oa;
        p.b_base[static_cast<size_t>(bi)] = ob;
        for (size_t i = L; i-- > 0;) {
            if (++idx[i] < batch_shape[i]) break;
            idx[i] = 0;
        }
    }
    return p;
}

template <class S>
bool has_repeats(const std::vector<int64_t>& base) {
    for (size_t i = 1; i < base.size(); ++i)
        if (base[i] <= base[i - 1]) return true;
    return false;
}

}  // namespace

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    MmPlan p = plan_matmul(a.shape(), b.shape());
    TensorT<S> out(p.out_shape);
    const S* ad = a.data();
    const S* bd = b.data();
    S* od = out.data();

    if (p.flat) {
        gemm_acc(ad, bd, od, p.flat_m, p.k, p.n);
    } else {
        parallel_batches(p.batch, [&](int64_t bi) {
            gemm_rows(ad + p.a_base[static_cast<size_t>(bi)], bd + p.b_base[static_cast<size_t>(bi)],
                      od + bi * p.m * p.n, 0, p.m, p.k, p.n);
        });
    }

    DiffTape<S>* tape = tape_of<S>({&a, &b});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto av = a.storage();
        auto bv = b.storage();
        int64_t an = a.node(), bn = b.node();
        back = [p, av, bv, an, bn](DiffTape<S>& t, const std::vector<S>& g) {
            const S* gd = g.data();
            if (an >= 0) {
                std::vector<S>& da = t.grad_buffer(an);
                if (p.flat) {
                    // da += g * B^T
                    std::vector<S> bt(static_cast<size_t>(p.k * p.n));
                    transpose2d(bv->data(), bt.data(), p.k, p.n);
                    gemm_acc(gd, bt.data(), da.data(), p.flat_m, p.n, p.k);
                } else {
                    std::vector<S> bt(static_cast<size_t>(p.k * p.n));
                    const bool par = !has_repeats<S>(p.a_base);
                    auto body = [&](int64_t bi, std::vector<S>& scratch) {
                        transpose2d(bv->data() + p.b_base[static_cast<size_t>(bi)], scratch.data(), p.k, p.n);
                        gemm_rows(gd + bi * p.m * p.n, scratch.data(),
                                  da.data() + p.a_base[static_cast<size_t>(bi)], 0, p.m, p.n, p.k);
                    };
                    if (par) {
                        parallel_batches(p.batch, [&](int64_t bi) {
                            std::vector<S> scratch(static_cast<size_t>(p.k * p.n));
                            body(bi, scratch);
                        });
                    } else {
                        for (int64_t bi = 0; bi < p.batch; ++bi) body(bi, bt);
                    }
                }
            }
            if (bn >= 0) {
                std::vector<S>& db = t.grad_buffer(bn);
                if (p.flat) {
                    gemm_at_acc(av->data(), gd, db.data(), p.flat_m, p.k, p.n);
                } else {
                    const bool par = !has_repeats<S>(p.b_base);
                    auto body = [&](int64_t bi) {
                        gemm_at_rows(av->data() + p.a_base[static_cast<size_t>(bi)], gd + bi * p.m * p.n,
                                     db.data() + p.b_base[static_cast<size_t>(bi)], 0, p.k, p.m, p.k, p.n);
                    };
                    if (par) {
                        parallel_batches(p.batch, body);
                    } else {
                        for (int64_t bi = 0; bi < p.batch; ++bi) body(bi);
                    }
                }
            }
        };
    }
    return finish_op("matmul", std::move(out), tape, std::move(back));
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

template <class S>
void require_same_shape(const char* op, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    require_same_shape("add", a, b);
    TensorT<S> out(a.shape());
    const S* x = a.data();
    const S* y = b.data();
    S* o = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) o[i] = x[i] + y[i];

    DiffTape<S>* tape = tape_of<S>({&a, &b});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node(), bn = b.node();
        back = [an, bn](DiffTape<S>& t, const std::vector<S>& g) {
            if (an >= 0) accumulate(t.grad_buffer(an), g);
            if (bn >= 0) accumulate(t.grad_buffer(bn), g);
        };
    }
    return finish_op("add", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    require_same_shape("sub", a, b);
    TensorT<S> out(a.shape());
    const S* x = a.data();
    const S* y = b.data();
    S* o = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) o[i] = x[i] - y[i];

    DiffTape<S>* tape = tape_of<S>({&a, &b});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node(), bn = b.node();
        back = [an, bn](DiffTape<S>& t, const std::vector<S>& g) {
            if (an >= 0) accumulate(t.grad_buffer(an), g);
            if (bn >= 0) {
                std::vector<S>& db = t.grad_buffer(bn);
                for (size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
            }
        };
    }
    return finish_op("sub", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> hadamard(const TensorT<S>& a, const TensorT<S>& b) {
    require_same_shape("hadamard", a, b);
    TensorT<S> out(a.shape());
    const S* x = a.data();
    const S* y = b.data();
    S* o = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) o[i] = x[i] * y[i];

    DiffTape<S>* tape = tape_of<S>({&a, &b});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto av = a.storage();
        auto bv = b.storage();
        int64_t an = a.node(), bn = b.node();
        back = [av, bv, an, bn](DiffTape<S>& t, const std::vector<S>& g) {
            if (an >= 0) {
                std::vector<S>& da = t.grad_buffer(an);
                for (size_t i = 0; i < da.size(); ++i) da[i] += g[i] * (*bv)[i];
            }
            if (bn >= 0) {
                std::vector<S>& db = t.grad_buffer(bn);
                for (size_t i = 0; i < db.size(); ++i) db[i] += g[i] * (*av)[i];
            }
        };
    }
    return finish_op("hadamard", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S factor) {
    TensorT<S> out(a.shape());
    const S* x = a.data();
    S* o = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) o[i] = x[i] * factor;

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, factor](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            for (size_t i = 0; i < da.size(); ++i) da[i] += g[i] * factor;
        };
    }
    return finish_op("scale", std::move(out), tape, std::move(back));
}

// ---------------------------------------------------------------------------
// layout ops
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> reshape(const TensorT<S>& a, Shape new_shape) {
    TensorT<S> out = a.with_shape(std::move(new_shape));
    DiffTape<S>* tape = tape_of<S>({&a});
    if (!tape) return out;
    int64_t an = a.node();
    return tape->record("reshape", std::move(out), [an](DiffTape<S>& t, const std::vector<S>& g) {
        if (an < 0) return;
        accumulate(t.grad_buffer(an), g);
    });
}

template <class S>
TensorT<S> transpose_last2(const TensorT<S>& a) {
    if (a.ndim() < 2) throw ShapeError("transpose_last2 needs >= 2 dims, got " + shape_str(a.shape()));
    Shape os = a.shape();
    std::swap(os[os.size() - 1], os[os.size() - 2]);
    const int64_t r = a.shape()[a.shape().size() - 2];
    const int64_t c = a.shape()[a.shape().size() - 1];
    const int64_t batch = a.size() / (r * c);
    TensorT<S> out(os);
    const S* x = a.data();
    S* o = out.data();
    for (int64_t bi = 0; bi < batch; ++bi)
        transpose2d(x + bi * r * c, o + bi * r * c, r, c);

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, r, c, batch](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            std::vector<S> gt(static_cast<size_t>(r * c));
            for (int64_t bi = 0; bi < batch; ++bi) {
                transpose2d(g.data() + bi * r * c, gt.data(), c, r);
                for (int64_t i = 0; i < r * c; ++i) da[static_cast<size_t>(bi * r * c + i)] += gt[static_cast<size_t>(i)];
            }
        };
    }
    return finish_op("transpose_last2", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> concat_lastdim(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.ndim() != b.ndim() || a.ndim() < 1)
        throw ShapeError("concat_lastdim: rank mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    for (int i = 0; i + 1 < a.ndim(); ++i)
        if (a.dim(i) != b.dim(i))
            throw ShapeError("concat_lastdim: leading dims differ " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    const int64_t d1 = a.dim(a.ndim() - 1), d2 = b.dim(b.ndim() - 1);
    Shape os = a.shape();
    os.back() = d1 + d2;
    TensorT<S> out(os);
    const int64_t rows = a.size() / d1;
    const S* x = a.data();
    const S* y = b.data();
    S* o = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t j = 0; j < d1; ++j) o[r * (d1 + d2) + j] = x[r * d1 + j];
        for (int64_t j = 0; j < d2; ++j) o[r * (d1 + d2) + d1 + j] = y[r * d2 + j];
    }

    DiffTape<S>* tape = tape_of<S>({&a, &b});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node(), bn = b.node();
        back = [an, bn, rows, d1, d2](DiffTape<S>& t, const std::vector<S>& g) {
            if (an >= 0) {
                std::vector<S>& da = t.grad_buffer(an);
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < d1; ++j)
                        da[static_cast<size_t>(r * d1 + j)] += g[static_cast<size_t>(r * (d1 + d2) + j)];
            }
            if (bn >= 0) {
                std::vector<S>& db = t.grad_buffer(bn);
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < d2; ++j)
                        db[static_cast<size_t>(r * d2 + j)] += g[static_cast<size_t>(r * (d1 + d2) + d1 + j)];
            }
        };
    }
    return finish_op("concat_lastdim", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> slice_lastdim(const TensorT<S>& a, int64_t start, int64_t len) {
    const int64_t d = a.dim(a.ndim() - 1);
    if (start < 0 || len < 0 || start + len > d)
        throw ShapeError("slice_lastdim: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of dim " + std::to_string(d));
    Shape os = a.shape();
    os.back() = len;
    TensorT<S> out(os);
    const int64_t rows = a.size() / d;
    const S* x = a.data();
    S* o = out.data();
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < len; ++j) o[r * len + j] = x[r * d + start + j];

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, rows, d, start, len](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < len; ++j)
                    da[static_cast<size_t>(r * d + start + j)] += g[static_cast<size_t>(r * len + j)];
        };
    }
    return finish_op("slice_lastdim", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> split_heads(const TensorT<S>& a, int64_t n_heads) {
    if (a.ndim() != 3) throw ShapeError("split_heads expects [b,t,d], got " + shape_str(a.shape()));
    const int64_t b = a.dim(0), t = a.dim(1), d = a.dim(2);
    if (d % n_heads != 0)
        throw ShapeError("split_heads: dim " + std::to_string(d) + " not divisible by " +
                         std::to_string(n_heads));
    const int64_t hd = d / n_heads;
    TensorT<S> out({b, n_heads, t, hd});
    const S* x = a.data();
    S* o = out.data();
    for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t h = 0; h < n_heads; ++h)
            for (int64_t ti = 0; ti < t; ++ti)
                for (int64_t j = 0; j < hd; ++j)
                    o[((bi * n_heads + h) * t + ti) * hd + j] = x[(bi * t + ti) * d + h * hd + j];

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, b, t, d, n_heads, hd](DiffTape<S>& tp, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = tp.grad_buffer(an);
            for (int64_t bi = 0; bi < b; ++bi)
                for (int64_t h = 0; h < n_heads; ++h)
                    for (int64_t ti = 0; ti < t; ++ti)
                        for (int64_t j = 0; j < hd; ++j)
                            da[static_cast<size_t>((bi * t + ti) * d + h * hd + j)] +=
                                g[static_cast<size_t>(((bi * n_heads + h) * t + ti) * hd + j)];
        };
    }
    return finish_op("split_heads", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> merge_heads(const TensorT<S>& a) {
    if (a.ndim() != 4) throw ShapeError("merge_heads expects [b,h,t,hd], got " + shape_str(a.shape()));
    const int64_t b = a.dim(0), h = a.dim(1), t = a.dim(2), hd = a.dim(3);
    const int64_t d = h * hd;
    TensorT<S> out({b, t, d});
    const S* x = a.data();
    S* o = out.data();
    for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t hi = 0; hi < h; ++hi)
            for (int64_t ti = 0; ti < t; ++ti)
                for (int64_t j = 0; j < hd; ++j)
                    o[(bi * t + ti) * d + hi * hd + j] = x[((bi * h + hi) * t + ti) * hd + j];

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, b, h, t, hd, d](DiffTape<S>& tp, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = tp.grad_buffer(an);
            for (int64_t bi = 0; bi < b; ++bi)
                for (int64_t hi = 0; hi < h; ++hi)
                    for (int64_t ti = 0; ti < t; ++ti)
                        for (int64_t j = 0; j < hd; ++j)
                            da[static_cast<size_t>(((bi * h + hi) * t + ti) * hd + j)] +=
                                g[static_cast<size_t>((bi * t + ti) * d + hi * hd + j)];
        };
    }
    return finish_op("merge_heads", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> repeat_heads(const TensorT<S>& a, int64_t group) {
    if (a.ndim() != 4) throw ShapeError("repeat_heads expects [b,h,t,hd], got " + shape_str(a.shape()));
    if (group < 1) throw ShapeError("repeat_heads: group must be >= 1");
    const int64_t b = a.dim(0), h = a.dim(1), t = a.dim(2), hd = a.dim(3);
    const int64_t rows = t * hd;
    TensorT<S> out({b, h * group, t, hd});
    const S* x = a.data();
    S* o = out.data();
    for (int64_t bi = 0; bi < b; ++bi)
        for (int64_t q = 0; q < h * group; ++q) {
            const S* src = x + (bi * h + q / group) * rows;
            S* dst = o + (bi * h * group + q) * rows;
            for (int64_t i = 0; i < rows; ++i) dst[i] = src[i];
        }

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an, b, h, group, rows](DiffTape<S>& tp, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = tp.grad_buffer(an);
            for (int64_t bi = 0; bi < b; ++bi)
                for (int64_t q = 0; q < h * group; ++q) {
                    S* dst = da.data() + (bi * h + q / group) * rows;
                    const S* src = g.data() + (bi * h * group + q) * rows;
                    for (int64_t i = 0; i < rows; ++i) dst[i] += src[i];
                }
        };
    }
    return finish_op("repeat_heads", std::move(out), tape, std::move(back));
}

// ---------------------------------------------------------------------------
// nonlinearities and norms
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> silu(const TensorT<S>& a) {
    TensorT<S> out(a.shape());
    const S* x = a.data();
    S* o = out.data();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
        const S s = S(1) / (S(1) + std::exp(-x[i]));
        o[i] = x[i] * s;
    }

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto av = a.storage();
        int64_t an = a.node();
        back = [an, av](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            for (size_t i = 0; i < da.size(); ++i) {
                const S xv = (*av)[i];
                const S s = S(1) / (S(1) + std::exp(-xv));
                da[i] += g[i] * (s * (S(1) + xv * (S(1) - s)));
            }
        };
    }
    return finish_op("silu", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> softmax_lastdim(const TensorT<S>& a) {
    if (a.ndim() < 1 || a.dim(a.ndim() - 1) < 1)
        throw ShapeError("softmax_lastdim: empty last dim in " + shape_str(a.shape()));
    const int64_t d = a.dim(a.ndim() - 1);
    const int64_t rows = a.size() / d;
    TensorT<S> out(a.shape());
    const S* x = a.data();
    S* o = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* xr = x + r * d;
        S* orow = o + r * d;
        S mx = xr[0];
        for (int64_t j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
        S sum = S(0);
        for (int64_t j = 0; j < d; ++j) {
            orow[j] = std::exp(xr[j] - mx);
            sum += orow[j];
        }
        const S inv = S(1) / sum;
        for (int64_t j = 0; j < d; ++j) orow[j] *= inv;
    }

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto ov = out.storage();
        int64_t an = a.node();
        back = [an, ov, rows, d](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            for (int64_t r = 0; r < rows; ++r) {
                const S* p = ov->data() + r * d;
                const S* gr = g.data() + r * d;
                S dot = S(0);
                for (int64_t j = 0; j < d; ++j) dot += p[j] * gr[j];
                S* dr = da.data() + r * d;
                for (int64_t j = 0; j < d; ++j) dr[j] += p[j] * (gr[j] - dot);
            }
        };
    }
    return finish_op("softmax_lastdim", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> causal_softmax(const TensorT<S>& a) {
    if (a.ndim() < 2 || a.dim(a.ndim() - 1) != a.dim(a.ndim() - 2))
        throw ShapeError("causal_softmax expects square trailing dims, got " + shape_str(a.shape()));
    const int64_t t = a.dim(a.ndim() - 1);
    const int64_t batch = a.size() / (t * t);
    TensorT<S> out(a.shape());
    const S* x = a.data();
    S* o = out.data();
    for (int64_t bi = 0; bi < batch; ++bi) {
        for (int64_t r = 0; r < t; ++r) {
            const S* xr = x + (bi * t + r) * t;
            S* orow = o + (bi * t + r) * t;
            S mx = xr[0];
            for (int64_t j = 1; j <= r; ++j) mx = std::max(mx, xr[j]);
            S sum = S(0);
            for (int64_t j = 0; j <= r; ++j) {
                orow[j] = std::exp(xr[j] - mx);
                sum += orow[j];
            }
            const S inv = S(1) / sum;
            for (int64_t j = 0; j <= r; ++j) orow[j] *= inv;
            for (int64_t j = r + 1; j < t; ++j) orow[j] = S(0);
        }
    }

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto ov = out.storage();
        int64_t an = a.node();
        back = [an, ov, batch, t](DiffTape<S>& tp, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = tp.grad_buffer(an);
            for (int64_t bi = 0; bi < batch; ++bi)
                for (int64_t r = 0; r < t; ++r) {
                    const S* p = ov->data() + (bi * t + r) * t;
                    const S* gr = g.data() + (bi * t + r) * t;
                    S dot = S(0);
                    for (int64_t j = 0; j <= r; ++j) dot += p[j] * gr[j];
                    S* dr = da.data() + (bi * t + r) * t;
                    for (int64_t j = 0; j <= r; ++j) dr[j] += p[j] * (gr[j] - dot);
                }
        };
    }
    return finish_op("causal_softmax", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> rms_norm(const TensorT<S>& a, const TensorT<S>& gain, S eps) {
    const int64_t d = a.dim(a.ndim() - 1);
    if (gain.ndim() != 1 || gain.dim(0) != d)
        throw ShapeError("rms_norm: gain " + shape_str(gain.shape()) + " does not match last dim of " +
                         shape_str(a.shape()));
    const int64_t rows = a.size() / d;
    TensorT<S> out(a.shape());
    const S* x = a.data();
    const S* gn = gain.data();
    S* o = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* xr = x + r * d;
        S* orow = o + r * d;
        S m = S(0);
        for (int64_t j = 0; j < d; ++j) m += xr[j] * xr[j];
        m /= static_cast<S>(d);
        const S inv = S(1) / std::sqrt(m + eps);
        for (int64_t j = 0; j < d; ++j) orow[j] = xr[j] * inv * gn[j];
    }

    DiffTape<S>* tape = tape_of<S>({&a, &gain});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto av = a.storage();
        auto gv = gain.storage();
        int64_t an = a.node(), gnode = gain.node();
        back = [an, gnode, av, gv, rows, d, eps](DiffTape<S>& t, const std::vector<S>& g) {
            std::vector<S>* da = an >= 0 ? &t.grad_buffer(an) : nullptr;
            std::vector<S>* dg = gnode >= 0 ? &t.grad_buffer(gnode) : nullptr;
            for (int64_t r = 0; r < rows; ++r) {
                const S* xr = av->data() + r * d;
                const S* gr = g.data() + r * d;
                S m = S(0);
                for (int64_t j = 0; j < d; ++j) m += xr[j] * xr[j];
                m /= static_cast<S>(d);
                const S inv = S(1) / std::sqrt(m + eps);
                if (dg) {
                    for (int64_t j = 0; j < d; ++j) (*dg)[static_cast<size_t>(j)] += gr[j] * xr[j] * inv;
                }
                if (da) {
                    S dot = S(0);
                    for (int64_t j = 0; j < d; ++j) dot += gr[j] * (*gv)[static_cast<size_t>(j)] * xr[j];
                    const S k = dot * inv * inv * inv / static_cast<S>(d);
                    S* dr = da->data() + r * d;
                    for (int64_t j = 0; j < d; ++j)
                        dr[j] += gr[j] * (*gv)[static_cast<size_t>(j)] * inv - xr[j] * k;
                }
            }
        };
    }
    return finish_op("rms_norm", std::move(out), tape, std::move(back));
}

// ---------------------------------------------------------------------------
// embedding and loss
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> embedding_gather(const TensorT<S>& table, const Ids& ids) {
    if (table.ndim() != 2) throw ShapeError("embedding_gather: table must be 2-d");
    const int64_t vocab = table.dim(0), d = table.dim(1);
    for (int32_t id : ids.v)
        if (id < 0 || id >= vocab)
            throw DataError("token id " + std::to_string(id) + " out of range [0," +
                            std::to_string(vocab) + ")");
    Shape os = ids.shape;
    os.push_back(d);
    TensorT<S> out(os);
    const S* tb = table.data();
    S* o = out.data();
    for (int64_t i = 0; i < ids.size(); ++i) {
        const S* src = tb + static_cast<int64_t>(ids.v[static_cast<size_t>(i)]) * d;
        S* dst = o + i * d;
        for (int64_t j = 0; j < d; ++j) dst[j] = src[j];
    }

    DiffTape<S>* tape = tape_of<S>({&table});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t tn = table.node();
        auto idv = ids.v;
        back = [tn, idv, d](DiffTape<S>& t, const std::vector<S>& g) {
            if (tn < 0) return;
            std::vector<S>& dt = t.grad_buffer(tn);
            for (size_t i = 0; i < idv.size(); ++i) {
                S* dst = dt.data() + static_cast<int64_t>(idv[i]) * d;
                const S* src = g.data() + static_cast<int64_t>(i) * d;
                for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        };
    }
    return finish_op("embedding_gather", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> cross_entropy_logits(const TensorT<S>& logits, const Ids& targets,
                                std::optional<int32_t> ignore_index) {
    if (logits.ndim() < 2) throw ShapeError("cross_entropy_logits: logits must be at least 2-d");
    const int64_t v = logits.dim(logits.ndim() - 1);
    const int64_t rows = logits.size() / v;
    if (rows != targets.size())
        throw ShapeError("cross_entropy_logits: " + std::to_string(rows) + " positions vs " +
                         std::to_string(targets.size()) + " targets");
    for (int32_t id : targets.v) {
        if (ignore_index && id == *ignore_index) continue;
        if (id < 0 || id >= v)
            throw DataError("target id " + std::to_string(id) + " out of range [0," + std::to_string(v) + ")");
    }
    int64_t counted = 0;
    for (int32_t id : targets.v)
        if (!ignore_index || id != *ignore_index) ++counted;
    if (counted == 0) throw UsageError("cross_entropy_logits: every position is ignored");

    const S* x = logits.data();
    double total = 0.0;
    for (int64_t r = 0; r < rows; ++r) {
        const int32_t tgt = targets.v[static_cast<size_t>(r)];
        if (ignore_index && tgt == *ignore_index) continue;
        const S* xr = x + r * v;
        S mx = xr[0];
        for (int64_t j = 1; j < v; ++j) mx = std::max(mx, xr[j]);
        S sum = S(0);
        for (int64_t j = 0; j < v; ++j) sum += std::exp(xr[j] - mx);
        total += static_cast<double>(std::log(sum) + mx - xr[tgt]);
    }
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(total / static_cast<double>(counted)));

    DiffTape<S>* tape = tape_of<S>({&logits});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        auto lv = logits.storage();
        auto tv = targets.v;
        int64_t ln = logits.node();
        back = [ln, lv, tv, rows, v, counted, ignore_index](DiffTape<S>& t, const std::vector<S>& g) {
            if (ln < 0) return;
            std::vector<S>& dl = t.grad_buffer(ln);
            const S go = g[0] / static_cast<S>(counted);
            for (int64_t r = 0; r < rows; ++r) {
                const int32_t tgt = tv[static_cast<size_t>(r)];
                if (ignore_index && tgt == *ignore_index) continue;
                const S* xr = lv->data() + r * v;
                S mx = xr[0];
                for (int64_t j = 1; j < v; ++j) mx = std::max(mx, xr[j]);
                S sum = S(0);
                for (int64_t j = 0; j < v; ++j) sum += std::exp(xr[j] - mx);
                const S inv = S(1) / sum;
                S* dr = dl.data() + r * v;
                for (int64_t j = 0; j < v; ++j) dr[j] += go * std::exp(xr[j] - mx) * inv;
                dr[tgt] -= go;
            }
        };
    }
    return finish_op("cross_entropy_logits", std::move(out), tape, std::move(back));
}

template <class S>
TensorT<S> sum_all(const TensorT<S>& a) {
    S total = S(0);
    for (const S& v : a.values()) total += v;
    TensorT<S> out = TensorT<S>::scalar(total);

    DiffTape<S>* tape = tape_of<S>({&a});
    typename DiffTape<S>::BackFn back = nullptr;
    if (tape) {
        int64_t an = a.node();
        back = [an](DiffTape<S>& t, const std::vector<S>& g) {
            if (an < 0) return;
            std::vector<S>& da = t.grad_buffer(an);
            for (auto& x : da) x += g[0];
        };
    }
    return finish_op("sum_all", std::move(out), tape, std::move(back));
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define ABBIE_INSTANTIATE_TENSOR(S)                                                              \
    template class TensorT<S>;                                                                   \
    template class DiffTape<S>;                                                                  \
    template void check_finite<S>(const TensorT<S>&, const char*);                              \
    template TensorT<S> matmul<S>(const TensorT<S>&, const TensorT<S>&);                         \
    template TensorT<S> add<S>(const TensorT<S>&, const TensorT<S>&);                            \
    template TensorT<S> sub<S>(const TensorT<S>&, const TensorT<S>&);                            \
    template TensorT<S> hadamard<S>(const TensorT<S>&, const TensorT<S>&);                       \
    template TensorT<S> scale<S>(const TensorT<S>&, S);                                          \
    template TensorT<S> reshape<S>(const TensorT<S>&, Shape);                                    \
    template TensorT<S> transpose_last2<S>(const TensorT<S>&);                                   \
    template TensorT<S> concat_lastdim<S>(const TensorT<S>&, const TensorT<S>&);                 \
    template TensorT<S> slice_lastdim<S>(const TensorT<S>&, int64_t, int64_t);                   \
    template TensorT<S> split_heads<S>(const TensorT<S>&, int64_t);                              \
    template TensorT<S> merge_heads<S>(const TensorT<S>&);                                       \
    template TensorT<S> repeat_heads<S>(const TensorT<S>&, int64_t);                             \
    template TensorT<S> silu<S>(const TensorT<S>&);                                              \
    template TensorT<S> softmax_lastdim<S>(const TensorT<S>&);                                   \
    template TensorT<S> causal_softmax<S>(const TensorT<S>&);                                    \
    template TensorT<S> rms_norm<S>(const TensorT<S>&, const TensorT<S>&, S);                    \
    template TensorT<S> embedding_gather<S>(const TensorT<S>&, const Ids&);                      \
    template TensorT<S> cross_entropy_logits<S>(const TensorT<S>&, const Ids&,                   \
                                                std::optional<int32_t>);                         \
    template TensorT<S> sum_all<S>(const TensorT<S>&);

ABBIE_INSTANTIATE_TENSOR(float)
ABBIE_INSTANTIATE_TENSOR(double)

}  // namespace abbie
