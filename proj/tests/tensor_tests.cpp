#include <doctest.h>

#include "helpers.hpp"
#include "pinsite/tensor.hpp"

using namespace pinsite;
using testutil::random_tensor;

TEST_CASE("tensor construction and shape accessors") {
    Tensor<double> t({2, 3, 4, 5});
    CHECK(t.size() == 120);
    CHECK(t.n() == 2);
    CHECK(t.c() == 3);
    CHECK(t.h() == 4);
    CHECK(t.w() == 5);
    Tensor<double> r1({6});
    CHECK(r1.c() == 1);
    CHECK(r1.w() == 1);
    CHECK_THROWS_AS(Tensor<double>({0, 2}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>({1, 2, 3, 4, 5}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("reshape preserves data and rejects bad element counts") {
    Tensor<double> t({2, 6});
    for (std::size_t i = 0; i < t.size(); ++i) t.v[i] = static_cast<double>(i);
    Tensor<double> r = t.reshaped({3, 4});
    CHECK(r.v == t.v);
    CHECK_THROWS_AS(t.reshaped({5, 2}), ShapeError);
}

TEST_CASE("elementwise ops on identical shapes") {
    Rng rng(1);
    Tensor<double> a = random_tensor({2, 3, 2, 2}, rng);
    Tensor<double> b = random_tensor({2, 3, 2, 2}, rng);
    Tensor<double> sum = ewise(EwiseKind::add, a, b);
    Tensor<double> dif = ewise(EwiseKind::sub, a, b);
    Tensor<double> prd = ewise(EwiseKind::mul, a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(sum.v[i] == doctest::Approx(a.v[i] + b.v[i]));
        CHECK(dif.v[i] == doctest::Approx(a.v[i] - b.v[i]));
        CHECK(prd.v[i] == doctest::Approx(a.v[i] * b.v[i]));
    }
}

TEST_CASE("channel broadcast multiply matches a manual loop") {
    Rng rng(2);
    Tensor<double> a = random_tensor({2, 4, 3, 3}, rng);
    Tensor<double> s = random_tensor({2, 4, 1, 1}, rng);
    Tensor<double> y = ewise(EwiseKind::mul, a, s);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 4; ++c)
            for (int h = 0; h < 3; ++h)
                for (int w = 0; w < 3; ++w)
                    CHECK(y.at(n, c, h, w) ==
                          doctest::Approx(a.at(n, c, h, w) * s.at(n, c, 0, 0)));

    Tensor<double> s1 = random_tensor({1, 4, 1, 1}, rng);
    Tensor<double> y1 = ewise(EwiseKind::mul, a, s1);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 4; ++c)
            CHECK(y1.at(n, c, 1, 2) == doctest::Approx(a.at(n, c, 1, 2) * s1.at(0, c, 0, 0)));

    Tensor<double> bad = random_tensor({2, 3, 1, 1}, rng);
    CHECK_THROWS_AS(ewise(EwiseKind::mul, a, bad), ShapeError);
}

TEST_CASE("broadcast multiply backward matches finite differences") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<double> a = random_tensor({2, 3, 2, 2}, rng);
        Tensor<double> b = random_tensor({trial % 2 ? 1 : 2, 3, 1, 1}, rng);
        Tensor<double> gy = random_tensor({2, 3, 2, 2}, rng);
        Tensor<double> ga, gb;
        ewise_mul_backward(gy, a, b, ga, gb);

        auto fa = [&](const Tensor<double>& p) {
            Tensor<double> y = ewise(EwiseKind::mul, p, b);
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += gy.v[i] * y.v[i];
            return s;
        };
        auto fb = [&](const Tensor<double>& p) {
            Tensor<double> y = ewise(EwiseKind::mul, a, p);
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += gy.v[i] * y.v[i];
            return s;
        };
        CHECK(max_rel_err(ga, finite_difference_gradient(fa, a)) < 1e-6);
        CHECK(max_rel_err(gb, finite_difference_gradient(fb, b)) < 1e-6);
    }
}

TEST_CASE("reductions match naive evaluation") {
    Rng rng(4);
    Tensor<double> x = random_tensor({2, 3, 4, 4}, rng);

    auto sum_hw = reduce(ReduceKind::sum, x, AxisSet{2, 3});
    auto mean_hw = reduce(ReduceKind::mean, x, AxisSet{2, 3});
    auto max_hw = reduce(ReduceKind::max, x, AxisSet{2, 3});
    CHECK(sum_hw.value.dims == std::vector<int>{2, 3, 1, 1});
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c) {
            double s = 0, mx = -1e300;
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 4; ++w) {
                    s += x.at(n, c, h, w);
                    mx = std::max(mx, x.at(n, c, h, w));
                }
            CHECK(sum_hw.value.at(n, c, 0, 0) == doctest::Approx(s));
            CHECK(mean_hw.value.at(n, c, 0, 0) == doctest::Approx(s / 16.0));
            CHECK(max_hw.value.at(n, c, 0, 0) == doctest::Approx(mx));
        }

    auto mean_c = reduce(ReduceKind::mean, x, AxisSet{1});
    CHECK(mean_c.value.dims == std::vector<int>{2, 1, 4, 4});
    double expect = (x.at(1, 0, 2, 3) + x.at(1, 1, 2, 3) + x.at(1, 2, 2, 3)) / 3.0;
    CHECK(mean_c.value.at(1, 0, 2, 3) == doctest::Approx(expect));

    auto dropped = reduce(ReduceKind::sum, x, AxisSet{2, 3}, false);
    CHECK(dropped.value.dims == std::vector<int>{2, 3});
}

TEST_CASE("max reduction routes ties to the first element in scan order") {
    Tensor<double> x({1, 1, 2, 2}, {3.0, 7.0, 7.0, 1.0});
    auto r = reduce(ReduceKind::max, x, AxisSet{2, 3});
    CHECK(r.argmax[0] == 1);
    Tensor<double> gy({1, 1, 1, 1}, {1.0});
    Tensor<double> gx = reduce_backward(ReduceKind::max, r, x, AxisSet{2, 3}, gy);
    CHECK(gx.v == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("reduce backward matches finite differences") {
    Rng rng(5);
    const ReduceKind kinds[] = {ReduceKind::sum, ReduceKind::mean, ReduceKind::max};
    const AxisSet axsets[] = {AxisSet{2, 3}, AxisSet{1}, AxisSet{0, 1, 2, 3}};
    for (ReduceKind kind : kinds)
        for (const AxisSet& axes : axsets)
            for (int trial = 0; trial < 5; ++trial) {
                Tensor<double> x = random_tensor({2, 3, 3, 2}, rng);
                auto fwd = reduce(kind, x, axes);
                Tensor<double> gy = random_tensor(fwd.value.dims, rng);
                Tensor<double> analytic = reduce_backward(kind, fwd, x, axes, gy);
                auto f = [&](const Tensor<double>& p) {
                    auto r = reduce(kind, p, axes);
                    double s = 0;
                    for (std::size_t i = 0; i < r.value.size(); ++i)
                        s += gy.v[i] * r.value.v[i];
                    return s;
                };
                CHECK(max_rel_err(analytic, finite_difference_gradient(f, x)) < 1e-6);
            }
}

TEST_CASE("concat and split are exact inverses") {
    Rng rng(6);
    Tensor<double> a = random_tensor({2, 2, 3, 3}, rng);
    Tensor<double> b = random_tensor({2, 1, 3, 3}, rng);
    Tensor<double> c = random_tensor({2, 4, 3, 3}, rng);
    Tensor<double> cat = concat_channels<double>({a, b, c});
    CHECK(cat.dims == std::vector<int>{2, 7, 3, 3});
    auto parts = split_channels(cat, {2, 1, 4});
    CHECK(parts[0].v == a.v);
    CHECK(parts[1].v == b.v);
    CHECK(parts[2].v == c.v);
    CHECK_THROWS_AS(split_channels(cat, {2, 2, 4}), ShapeError);
    Tensor<double> mismatched = random_tensor({2, 1, 2, 3}, rng);
    CHECK_THROWS_AS(concat_channels<double>({a, mismatched}), ShapeError);
}

TEST_CASE("finite-difference oracle recovers an analytic gradient") {
    Rng rng(7);
    Tensor<double> x = random_tensor({5}, rng, 2.0);
    // f = sum(3 x^2 + 2 x), df/dx = 6 x + 2
    auto f = [](const Tensor<double>& p) {
        double s = 0;
        for (double v : p.v) s += 3.0 * v * v + 2.0 * v;
        return s;
    };
    Tensor<double> g = finite_difference_gradient(f, x);
    Tensor<double> expect(x.dims);
    for (std::size_t i = 0; i < x.size(); ++i) expect.v[i] = 6.0 * x.v[i] + 2.0;
    CHECK(max_rel_err(g, expect) < 1e-8);
}

TEST_CASE("max_rel_err scales by the largest magnitude") {
    Tensor<double> a({2}, {100.0, 0.0});
    Tensor<double> b({2}, {101.0, 0.0});
    CHECK(max_rel_err(a, b) == doctest::Approx(1.0 / 101.0));
    Tensor<double> c({2}, {0.5, 0.0});
    Tensor<double> d({2}, {0.4, 0.0});
    // scale floor of 1 keeps small values absolute
    CHECK(max_rel_err(c, d) == doctest::Approx(0.1));
}

TEST_CASE("clamp and scale helpers") {
    Tensor<double> x({4}, {-2.0, 0.5, 3.0, 9.0});
    Tensor<double> c = ewise_clamp(x, 0.0, 6.0);
    CHECK(c.v == std::vector<double>{0.0, 0.5, 3.0, 6.0});
    Tensor<double> s = ewise_scale(x, 2.0);
    CHECK(s.v == std::vector<double>{-4.0, 1.0, 6.0, 18.0});
}
