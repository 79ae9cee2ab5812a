#include <doctest.h>

#include <cmath>
#include <cstring>

#include "abbie/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace abbie;
using testsupport::fd_check_tensor;
using testsupport::random_tensor;

namespace {

struct FiniteChecksOn {
    FiniteChecksOn() { set_finite_checks(true); }
    ~FiniteChecksOn() { set_finite_checks(false); }
};

}  // namespace

TEST_CASE("matmul basic cases") {
    Tensor id({2, 2}, {1, 0, 0, 1});
    Tensor a({2, 2}, {1, 2, 3, 4});
    auto r = matmul(id, a);
    CHECK(r.values() == std::vector<float>{1, 2, 3, 4});

    Tensor b({2, 2}, {5, 6, 7, 8});
    auto c = matmul(a, b);
    CHECK(c.values() == std::vector<float>{19, 22, 43, 50});

    auto big = matmul(random_tensor<float>({2, 3, 4}, 1), random_tensor<float>({4, 5}, 2));
    CHECK(big.shape() == Shape{2, 3, 5});
}

TEST_CASE("matmul batched matches per-slice products") {
    auto a = random_tensor<float>({2, 3, 4, 5}, 10);
    auto b = random_tensor<float>({2, 3, 5, 6}, 11);
    auto c = matmul(a, b);
    CHECK(c.shape() == Shape{2, 3, 4, 6});
    for (int64_t s = 0; s < 6; ++s) {
        Tensor as({4, 5}, std::vector<float>(a.data() + s * 20, a.data() + (s + 1) * 20));
        Tensor bs({5, 6}, std::vector<float>(b.data() + s * 30, b.data() + (s + 1) * 30));
        auto cs = matmul(as, bs);
        for (int64_t i = 0; i < 24; ++i)
            CHECK(c.data()[s * 24 + i] == doctest::Approx(cs.data()[i]).epsilon(1e-6));
    }
}

TEST_CASE("matmul shape errors carry both shapes") {
    Tensor a({2, 3});
    Tensor b({4, 2});
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2,3)") != std::string::npos);
        CHECK(msg.find("(4,2)") != std::string::npos);
    }
}

TEST_CASE("softmax rows") {
    Tensor x({2}, {0, 0});
    auto s = softmax_lastdim(x);
    CHECK(s.data()[0] == doctest::Approx(0.5));
    CHECK(s.data()[1] == doctest::Approx(0.5));

    Tensor shifted({2}, {1000, 1000});
    auto s2 = softmax_lastdim(shifted);
    CHECK(s2.data()[0] == doctest::Approx(0.5));

    Tensor ln3({2}, {0.0f, std::log(3.0f)});
    auto s3 = softmax_lastdim(ln3);
    CHECK(s3.data()[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(s3.data()[1] == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to one on random input") {
    auto x = random_tensor<float>({7, 13}, 3, 4.0);
    auto s = softmax_lastdim(x);
    for (int64_t r = 0; r < 7; ++r) {
        double sum = 0;
        for (int64_t j = 0; j < 13; ++j) sum += s.data()[r * 13 + j];
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("causal softmax masks strictly above the diagonal") {
    auto x = random_tensor<float>({2, 4, 4}, 5);
    auto p = causal_softmax(x);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t i = 0; i < 4; ++i) {
            double sum = 0;
            for (int64_t j = 0; j < 4; ++j) {
                const float v = p.data()[(b * 4 + i) * 4 + j];
                if (j > i) CHECK(v == 0.0f);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
}

TEST_CASE("rms_norm closed forms") {
    Tensor gain = Tensor::full({4}, 1.0f);
    Tensor x({4}, {2, 2, 2, 2});
    auto y = rms_norm(x, gain, 0.0f);
    for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(1.0));

    Tensor zeros({4});
    auto z = rms_norm(zeros, gain, 1e-5f);
    for (int i = 0; i < 4; ++i) CHECK(z.data()[i] == 0.0f);

    Tensor g2 = Tensor::full({2}, 1.0f);
    Tensor v({2}, {3, 4});
    auto w = rms_norm(v, g2, 0.0f);
    CHECK(w.data()[0] == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-6));
    CHECK(w.data()[1] == doctest::Approx(4.0 / std::sqrt(12.5)).epsilon(1e-6));
}

TEST_CASE("rms_norm output RMS equals the constant gain") {
    auto x = random_tensor<float>({5, 9}, 8, 3.0);
    Tensor gain = Tensor::full({9}, 1.7f);
    auto y = rms_norm(x, gain, 0.0f);
    for (int64_t r = 0; r < 5; ++r) {
        double ms = 0;
        for (int64_t j = 0; j < 9; ++j)
            ms += static_cast<double>(y.data()[r * 9 + j]) * y.data()[r * 9 + j];
        CHECK(std::sqrt(ms / 9) == doctest::Approx(1.7).epsilon(1e-5));
    }
}

TEST_CASE("silu values") {
    Tensor x({3}, {0.0f, 1.0f, -20.0f});
    auto y = silu(x);
    CHECK(y.data()[0] == 0.0f);
    const double sig1 = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(y.data()[1] == doctest::Approx(sig1).epsilon(1e-6));
    const double expect = -20.0 / (1.0 + std::exp(20.0));
    CHECK(y.data()[2] == doctest::Approx(expect).epsilon(1e-5));
    CHECK(std::isfinite(y.data()[2]));
}

TEST_CASE("elementwise suite") {
    auto x = random_tensor<float>({3, 4}, 2);
    auto zeros = Tensor({3, 4});
    CHECK(add(x, zeros).values() == x.values());

    auto a = random_tensor<float>({2, 3}, 3);
    auto b = random_tensor<float>({2, 5}, 4);
    CHECK(concat_lastdim(a, b).shape() == Shape{2, 8});

    auto t = transpose_last2(transpose_last2(x));
    CHECK(t.values() == x.values());

    auto sl = slice_lastdim(concat_lastdim(a, b), 0, 3);
    CHECK(sl.values() == a.values());

    CHECK_THROWS_AS(add(x, Tensor({4, 3})), ShapeError);
    CHECK(reshape(x, {4, 3}).shape() == Shape{4, 3});
    CHECK(reshape(x, {4, 3}).values() == x.values());
}

TEST_CASE("head splitting round trip and kv repetition") {
    auto x = random_tensor<float>({2, 3, 8}, 6);
    auto split = split_heads(x, 4);
    CHECK(split.shape() == Shape{2, 4, 3, 2});
    CHECK(merge_heads(split).values() == x.values());

    auto kv = random_tensor<float>({1, 2, 3, 2}, 7);
    auto rep = repeat_heads(kv, 3);
    CHECK(rep.shape() == Shape{1, 6, 3, 2});
    // output head q reads input head q/3
    for (int64_t q = 0; q < 6; ++q)
        for (int64_t i = 0; i < 6; ++i)
            CHECK(rep.data()[q * 6 + i] == kv.data()[(q / 3) * 6 + i]);
}

TEST_CASE("cross entropy closed forms") {
    Tensor uniform({1, 1, 4});
    Ids target({1, 1}, {2});
    CHECK(cross_entropy_logits(uniform, target).item() ==
          doctest::Approx(std::log(4.0)).epsilon(1e-6));

    Tensor peaked({1, 1, 4});
    peaked.data()[2] = 30.0f;
    CHECK(cross_entropy_logits(peaked, target).item() < 1e-6);

    Tensor two({1, 1, 2}, {0.0f, std::log(3.0f)});
    Ids t1({1, 1}, {1});
    CHECK(cross_entropy_logits(two, t1).item() ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-6));

    Ids bad({1, 1}, {7});
    CHECK_THROWS_AS(cross_entropy_logits(two, bad), DataError);

    // ignore_index drops positions from the mean
    Tensor pair({1, 2, 2}, {0.0f, std::log(3.0f), 5.0f, 5.0f});
    Ids with_ignored({1, 2}, {1, -1});
    CHECK(cross_entropy_logits(pair, with_ignored, -1).item() ==
          doctest::Approx(-std::log(0.75)).epsilon(1e-6));
}

TEST_CASE("backward of a bilinear form gives the other factor") {
    DiffTape<float> tape;
    auto x = random_tensor<float>({3, 3}, 9);
    auto y = random_tensor<float>({3, 3}, 10);
    tape.watch(x);
    tape.watch(y);
    auto loss = sum_all(hadamard(x, y));
    tape.backward(loss);
    CHECK(tape.grad(x).values() == y.values());
    CHECK(tape.grad(y).values() == x.values());
}

TEST_CASE("silu gradient at zero is one half") {
    DiffTape<float> tape;
    Tensor x({4});
    tape.watch(x);
    tape.backward(sum_all(silu(x)));
    for (int i = 0; i < 4; ++i) CHECK(tape.grad(x).data()[i] == doctest::Approx(0.5));
}

TEST_CASE("backward requires a scalar on this tape") {
    DiffTape<float> tape;
    auto x = random_tensor<float>({2, 2}, 1);
    tape.watch(x);
    auto y = add(x, x);
    CHECK_THROWS_AS(tape.backward(y), UsageError);
    DiffTape<float> other;
    auto z = random_tensor<float>({1}, 2);
    other.watch(z);
    CHECK_THROWS_AS(tape.backward(sum_all(z)), UsageError);
    CHECK_THROWS_AS(hadamard(x, z.with_shape({1})), ShapeError);
}

TEST_CASE("unreached leaves get zero gradient") {
    DiffTape<float> tape;
    auto x = random_tensor<float>({2}, 3);
    auto unused = random_tensor<float>({2}, 4);
    tape.watch(x);
    tape.watch(unused);
    tape.backward(sum_all(x));
    CHECK(tape.grad(unused).values() == std::vector<float>{0, 0});
}

TEST_CASE("gradients accumulate across fan-out") {
    DiffTape<float> tape;
    Tensor x({1}, {3.0f});
    tape.watch(x);
    // loss = x*x + x -> dx = 2x + 1 = 7
    auto loss = sum_all(add(hadamard(x, x), x));
    tape.backward(loss);
    CHECK(tape.grad(x).data()[0] == doctest::Approx(7.0));
}

TEST_CASE("determinism: identical inputs give bitwise identical results") {
    auto run = [] {
        auto a = random_tensor<float>({8, 33}, 42);
        auto b = random_tensor<float>({33, 17}, 43);
        auto c = matmul(a, b);
        auto s = softmax_lastdim(c);
        return sum_all(s).item();
    };
    const float r1 = run();
    const float r2 = run();
    CHECK(std::memcmp(&r1, &r2, sizeof(float)) == 0);
}

TEST_CASE("finite checks surface NaN/Inf") {
    FiniteChecksOn guard;
    Tensor big = Tensor::full({4}, 3e38f);
    CHECK_THROWS_AS(add(big, big), NumericsError);
}

// ---------------------------------------------------------------------------
// finite-difference checks, one per primitive (64-bit mode)
// ---------------------------------------------------------------------------

namespace {

// loss = sum(op(x) . mask) with a fixed random mask.
template <class Op>
void check_unary_gradient(Shape shape, Op&& op, uint64_t seed, double spread = 1.0) {
    auto x = random_tensor<double>(shape, seed, spread);
    auto mask = random_tensor<double>(Shape{}, 0);  // resized below
    {
        DiffTape<double> tape;
        tape.watch(x);
        auto y = op(x);
        mask = random_tensor<double>(y.shape(), seed + 1);
        auto loss = sum_all(hadamard(y, mask));
        tape.backward(loss);
        auto analytic = tape.grad(x);
        auto eval = [&] { return sum_all(hadamard(op(x), mask)).item(); };
        CHECK(fd_check_tensor(x, analytic, eval) < 1e-4);
    }
}

}  // namespace

TEST_CASE("fd: elementwise and layout primitives") {
    check_unary_gradient({3, 5}, [](const TensorT<double>& t) { return silu(t); }, 21);
    check_unary_gradient({4, 6}, [](const TensorT<double>& t) { return softmax_lastdim(t); }, 22, 2.0);
    check_unary_gradient({2, 5, 5}, [](const TensorT<double>& t) { return causal_softmax(t); }, 23, 2.0);
    check_unary_gradient({3, 4}, [](const TensorT<double>& t) { return scale(t, 2.5); }, 24);
    check_unary_gradient({3, 4}, [](const TensorT<double>& t) { return reshape(t, {2, 6}); }, 25);
    check_unary_gradient({2, 3, 4}, [](const TensorT<double>& t) { return transpose_last2(t); }, 26);
    check_unary_gradient({2, 8}, [](const TensorT<double>& t) { return slice_lastdim(t, 3, 4); }, 27);
    check_unary_gradient({2, 3, 8}, [](const TensorT<double>& t) { return split_heads(t, 4); }, 28);
    check_unary_gradient({2, 4, 3, 2}, [](const TensorT<double>& t) { return merge_heads(t); }, 29);
    check_unary_gradient({1, 2, 3, 4}, [](const TensorT<double>& t) { return repeat_heads(t, 3); }, 30);
}

TEST_CASE("fd: rms_norm for both inputs") {
    auto x = random_tensor<double>({3, 6}, 31);
    auto gain = random_tensor<double>({6}, 32);
    TensorT<double> mask;
    TensorT<double> gx, gg;
    {
        DiffTape<double> tape;
        tape.watch(x);
        tape.watch(gain);
        auto y = rms_norm(x, gain, 1e-6);
        mask = random_tensor<double>(y.shape(), 33);
        tape.backward(sum_all(hadamard(y, mask)));
        gx = tape.grad(x);
        gg = tape.grad(gain);
    }
    auto eval = [&] { return sum_all(hadamard(rms_norm(x, gain, 1e-6), mask)).item(); };
    CHECK(fd_check_tensor(x, gx, eval) < 1e-4);
    CHECK(fd_check_tensor(gain, gg, eval) < 1e-4);
}

TEST_CASE("fd: matmul flat, broadcast and batched") {
    auto check_mm = [](Shape sa, Shape sb, uint64_t seed) {
        auto a = random_tensor<double>(sa, seed);
        auto b = random_tensor<double>(sb, seed + 1);
        TensorT<double> mask, ga, gb;
        {
            DiffTape<double> tape;
            tape.watch(a);
            tape.watch(b);
            auto y = matmul(a, b);
            mask = random_tensor<double>(y.shape(), seed + 2);
            tape.backward(sum_all(hadamard(y, mask)));
            ga = tape.grad(a);
            gb = tape.grad(b);
        }
        auto eval = [&] { return sum_all(hadamard(matmul(a, b), mask)).item(); };
        CHECK(fd_check_tensor(a, ga, eval) < 1e-4);
        CHECK(fd_check_tensor(b, gb, eval) < 1e-4);
    };
    check_mm({3, 4}, {4, 5}, 40);
    check_mm({2, 3, 4}, {4, 5}, 43);       // flattened path, b broadcast
    check_mm({2, 2, 3, 4}, {2, 2, 4, 3}, 46);  // equal batch dims
    check_mm({2, 2, 3}, {1, 3, 4}, 49);    // size-1 batch broadcast of b
}

TEST_CASE("fd: concat, embedding and cross entropy") {
    auto a = random_tensor<double>({2, 3}, 50);
    auto b = random_tensor<double>({2, 4}, 51);
    TensorT<double> mask, ga, gb;
    {
        DiffTape<double> tape;
        tape.watch(a);
        tape.watch(b);
        auto y = concat_lastdim(a, b);
        mask = random_tensor<double>(y.shape(), 52);
        tape.backward(sum_all(hadamard(y, mask)));
        ga = tape.grad(a);
        gb = tape.grad(b);
    }
    auto eval = [&] { return sum_all(hadamard(concat_lastdim(a, b), mask)).item(); };
    CHECK(fd_check_tensor(a, ga, eval) < 1e-4);
    CHECK(fd_check_tensor(b, gb, eval) < 1e-4);

    auto table = random_tensor<double>({7, 4}, 53);
    Ids ids({2, 3}, {0, 3, 6, 3, 1, 1});
    TensorT<double> gmask, gt;
    {
        DiffTape<double> tape;
        tape.watch(table);
        auto y = embedding_gather(table, ids);
        gmask = random_tensor<double>(y.shape(), 54);
        tape.backward(sum_all(hadamard(y, gmask)));
        gt = tape.grad(table);
    }
    auto eval_emb = [&] { return sum_all(hadamard(embedding_gather(table, ids), gmask)).item(); };
    CHECK(fd_check_tensor(table, gt, eval_emb) < 1e-4);

    auto logits = random_tensor<double>({2, 3, 5}, 55, 2.0);
    Ids targets({2, 3}, {1, 4, -1, 0, 2, 3});
    TensorT<double> gl;
    {
        DiffTape<double> tape;
        tape.watch(logits);
        tape.backward(cross_entropy_logits(logits, targets, -1));
        gl = tape.grad(logits);
    }
    auto eval_ce = [&] { return cross_entropy_logits(logits, targets, -1).item(); };
    CHECK(fd_check_tensor(logits, gl, eval_ce) < 1e-4);
}
