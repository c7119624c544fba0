#include <catch_amalgamated.hpp>

#include <cmath>

#include "dygmamba/mlp.hpp"
#include "dygmamba/optim.hpp"
#include "dygmamba/tape.hpp"
#include "testutil.hpp"

using namespace dygmamba;
using testutil::max_grad_rel_err;
using testutil::random_tensor;

TEST_CASE("mlp: identity and constant layers", "[numerics]") {
    Rng rng(1);
    MLP id = make_linear("id", 3, 3, rng);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) id.layers[0].weight.value.at(i, j) = i == j ? 1.0 : 0.0;
    Tensor x = random_tensor(4, 3, rng);
    Tensor y = eval_mlp(id, x);
    for (size_t i = 0; i < x.size(); ++i) CHECK(y.v[i] == x.v[i]);

    MLP cst = make_linear("cst", 3, 2, rng);
    cst.layers[0].weight.value.fill(0.0);
    cst.layers[0].bias.value.at(0, 0) = 0.5;
    cst.layers[0].bias.value.at(0, 1) = -2.0;
    Tensor z = eval_mlp(cst, x);
    for (int i = 0; i < z.rows; ++i) {
        CHECK(z.at(i, 0) == 0.5);
        CHECK(z.at(i, 1) == -2.0);
    }
}

TEST_CASE("mlp: two-layer output equals independent per-row evaluation", "[numerics]") {
    Rng rng(2);
    MLP m = make_mlp_hidden("m", 4, 5, 2, rng);
    Tensor x = random_tensor(3, 4, rng);
    Tensor y = eval_mlp(m, x);
    // row-by-row oracle: plain loops over the affine+tanh chain
    for (int r = 0; r < 3; ++r) {
        std::vector<double> h(5, 0.0);
        for (int j = 0; j < 5; ++j) {
            double s = m.layers[0].bias.value.at(0, j);
            for (int i = 0; i < 4; ++i) s += x.at(r, i) * m.layers[0].weight.value.at(i, j);
            h[j] = std::tanh(s);
        }
        for (int j = 0; j < 2; ++j) {
            double s = m.layers[1].bias.value.at(0, j);
            for (int i = 0; i < 5; ++i) s += h[i] * m.layers[1].weight.value.at(i, j);
            CHECK_THAT(y.at(r, j), Catch::Matchers::WithinAbs(s, 1e-12));
        }
    }
    Tape t(false);
    CHECK_THROWS_AS(apply_mlp(t, m, t.constant(Tensor(3, 5))), Error);
}

TEST_CASE("layer_norm: constant and standardized rows", "[numerics]") {
    Tape t(false);
    Parameter gain("g", Tensor(1, 2, 1.0)), bias("b", Tensor(1, 2, 0.0));
    Var c = t.layer_norm(t.constant(Tensor(1, 2, 3.0)), t.leaf(gain), t.leaf(bias));
    CHECK_THAT(t.val(c).at(0, 0), Catch::Matchers::WithinAbs(0.0, 1e-9));

    Var r = t.layer_norm(t.constant(Tensor::from_rows(1, 2, {1.0, -1.0})), t.leaf(gain),
                         t.leaf(bias), 1e-12);
    CHECK_THAT(t.val(r).at(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(t.val(r).at(0, 1), Catch::Matchers::WithinAbs(-1.0, 1e-6));
}

TEST_CASE("layer_norm: random rows standardized before the affine map", "[numerics]") {
    Rng rng(3);
    const int C = 8;
    Parameter gain("g", Tensor(1, C, 1.0)), bias("b", Tensor(1, C, 0.0));
    Tensor x = random_tensor(5, C, rng);
    Tape t(false);
    const Tensor& y = t.val(t.layer_norm(t.constant(x), t.leaf(gain), t.leaf(bias), 1e-10));
    for (int i = 0; i < y.rows; ++i) {
        double mu = 0.0, var = 0.0;
        for (int j = 0; j < C; ++j) mu += y.at(i, j);
        mu /= C;
        for (int j = 0; j < C; ++j) var += (y.at(i, j) - mu) * (y.at(i, j) - mu);
        var /= C;
        CHECK(std::abs(mu) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("softmax: uniform, stability and normalization", "[numerics]") {
    Tape t(false);
    const Tensor& u = t.val(t.softmax_vec(t.constant(Tensor(4, 1, 2.5))));
    for (double x : u.v) CHECK_THAT(x, Catch::Matchers::WithinAbs(0.25, 1e-15));

    const Tensor& s = t.val(t.softmax_vec(t.constant(Tensor::from_rows(2, 1, {1000.0, 0.0}))));
    CHECK_THAT(s.at(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(s.at(1, 0) >= 0.0);

    Rng rng(4);
    Tensor r = random_tensor(6, 1, rng, -3, 3);
    const Tensor& y = t.val(t.softmax_vec(t.constant(r)));
    double sum = 0.0;
    for (double x : y.v) {
        CHECK(x > 0.0);
        sum += x;
    }
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    // monotone: larger input, larger weight
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (r.at(i, 0) > r.at(j, 0)) CHECK(y.at(i, 0) > y.at(j, 0));
}

TEST_CASE("softplus: values and sigmoid derivative", "[numerics]") {
    Tape t(false);
    const Tensor& y = t.val(t.softplus_(t.constant(Tensor::from_rows(1, 2, {0.0, 100.0}))));
    CHECK_THAT(y.at(0, 0), Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
    CHECK_THAT(y.at(0, 1), Catch::Matchers::WithinAbs(100.0, 1e-12));

    Rng rng(5);
    Parameter x("x", random_tensor(2, 3, rng, -4, 4));
    double err = max_grad_rel_err({&x}, [&](Tape& tp) {
        return tp.sum_all(tp.softplus_(tp.leaf(x)));
    });
    CHECK(err < 1e-7);
    // analytic derivative is exactly the sigmoid
    Tape tg(true);
    Var sp = tg.sum_all(tg.softplus_(tg.leaf(x)));
    x.zero_grad();
    tg.backward(sp);
    for (size_t i = 0; i < x.value.size(); ++i) {
        double sig = 1.0 / (1.0 + std::exp(-x.value.v[i]));
        CHECK_THAT(x.grad.v[i], Catch::Matchers::WithinAbs(sig, 1e-12));
    }
}

TEST_CASE("backward: linear case has outer-product structure", "[numerics]") {
    Rng rng(6);
    Parameter w("w", random_tensor(3, 4, rng));
    Tensor xv = random_tensor(2, 3, rng);
    Tape t(true);
    Var x = t.constant(xv);
    Var loss = t.sum_all(t.matmul(x, t.leaf(w)));
    w.zero_grad();
    t.backward(loss);
    // dL/dW[i][j] = sum_r x[r][i]
    for (int i = 0; i < 3; ++i) {
        double colsum = xv.at(0, i) + xv.at(1, i);
        for (int j = 0; j < 4; ++j) CHECK_THAT(w.grad.at(i, j), Catch::Matchers::WithinAbs(colsum, 1e-12));
    }
}

TEST_CASE("backward: sigmoid at zero has slope one quarter", "[numerics]") {
    Parameter p("p", Tensor(1, 1, 0.0));
    Tape t(true);
    Var loss = t.sigmoid_(t.leaf(p));
    p.zero_grad();
    t.backward(loss);
    CHECK_THAT(p.grad.v[0], Catch::Matchers::WithinAbs(0.25, 1e-15));
}

TEST_CASE("backward: second call on one trace is a state error", "[numerics]") {
    Parameter p("p", Tensor(1, 1, 0.5));
    Tape t(true);
    Var loss = t.sigmoid_(t.leaf(p));
    t.backward(loss);
    CHECK_THROWS_AS(t.backward(loss), Error);
    Tape ng(false);
    CHECK_THROWS_AS(ng.backward(ng.sigmoid_(ng.constant(Tensor(1, 1, 0.0)))), Error);
}

TEST_CASE("backward: gradients are bit-identical across runs", "[numerics]") {
    Rng rng(7);
    Parameter w("w", random_tensor(4, 4, rng));
    Parameter b("b", random_tensor(1, 4, rng));
    Tensor x = random_tensor(5, 4, rng);
    auto run = [&] {
        w.zero_grad();
        b.zero_grad();
        Tape t(true);
        Var h = t.tanh_(t.add_row(t.matmul(t.constant(x), t.leaf(w)), t.leaf(b)));
        t.backward(t.sum_all(t.softmax_vec(t.mean_rows(h))));
        std::vector<double> g = w.grad.v;
        g.insert(g.end(), b.grad.v.begin(), b.grad.v.end());
        return g;
    };
    CHECK(run() == run());
}

TEST_CASE("tape ops: finite differences validate every operator", "[numerics]") {
    Rng rng(8);
    Parameter a("a", random_tensor(3, 4, rng));
    Parameter b("b", random_tensor(4, 2, rng));
    Parameter c("c", random_tensor(3, 4, rng));
    Parameter col("col", random_tensor(3, 1, rng));
    Parameter row("row", random_tensor(1, 4, rng));
    Parameter vec("vec", random_tensor(5, 1, rng));
    Parameter gain("gain", random_tensor(1, 4, rng, 0.5, 1.5));
    Parameter bias("bias", random_tensor(1, 4, rng));
    Parameter pos("pos", random_tensor(2, 3, rng, 0.2, 2.0));

    auto check = [&](std::vector<Parameter*> ps, std::function<Var(Tape&)> f, double tol = 2e-6) {
        CAPTURE(ps[0]->name);
        CHECK(max_grad_rel_err(ps, f) < tol);
    };
    check({&a, &b}, [&](Tape& t) { return t.sum_all(t.matmul(t.leaf(a), t.leaf(b))); });
    check({&a, &c}, [&](Tape& t) { return t.sum_all(t.tanh_(t.matmul_tn(t.leaf(a), t.leaf(c)))); });
    check({&a, &c}, [&](Tape& t) { return t.sum_all(t.tanh_(t.matmul_nt(t.leaf(a), t.leaf(c)))); });
    check({&a, &c}, [&](Tape& t) { return t.sum_all(t.mul(t.leaf(a), t.leaf(c))); });
    check({&a, &row}, [&](Tape& t) { return t.sum_all(t.sigmoid_(t.add_row(t.leaf(a), t.leaf(row)))); });
    check({&col, &row}, [&](Tape& t) { return t.sum_all(t.tanh_(t.col_plus_row(t.leaf(col), t.leaf(row)))); });
    check({&a}, [&](Tape& t) { return t.sum_all(t.affine(t.leaf(a), -1.7, 0.3)); });
    check({&a, &c}, [&](Tape& t) {
        return t.sum_all(t.tanh_(t.concat_cols({t.leaf(a), t.leaf(c)})));
    });
    check({&a}, [&](Tape& t) { return t.sum_all(t.neg_exp(t.leaf(a))); });
    check({&pos}, [&](Tape& t) { return t.sum_all(t.log_(t.leaf(pos))); });
    check({&a}, [&](Tape& t) { return t.sum_all(t.clamp(t.leaf(a), -0.5, 0.5)); });
    check({&vec}, [&](Tape& t) { return t.sum_all(t.mul(t.softmax_vec(t.leaf(vec)), t.leaf(vec))); });
    check({&a, &gain, &bias}, [&](Tape& t) {
        return t.sum_all(t.tanh_(t.layer_norm(t.leaf(a), t.leaf(gain), t.leaf(bias))));
    });
    check({&a}, [&](Tape& t) { return t.sum_all(t.tanh_(t.mean_rows(t.leaf(a)))); });
    check({&a}, [&](Tape& t) { return t.sum_all(t.tanh_(t.patch_rows(t.leaf(a), 2))); });

    Parameter omega("omega", random_tensor(1, 3, rng, 0.1, 2.0));
    Parameter phi("phi", random_tensor(1, 3, rng));
    Parameter miss("miss", random_tensor(1, 3, rng));
    check({&omega, &phi, &miss}, [&](Tape& t) {
        return t.sum_all(t.time_encoding(t.leaf(omega), t.leaf(phi), {0.3, 1.7, 0.0, 2.2},
                                         {0, 1, 0, 1}, t.leaf(miss)));
    });
}

TEST_CASE("dropout: inverted mask preserves expectation and gradients", "[numerics]") {
    Rng rng(9);
    Parameter a("a", random_tensor(8, 8, rng, 0.5, 1.5));
    Rng drop_rng(11);
    Tape t(true);
    Var y = t.dropout(t.leaf(a), 0.4, drop_rng);
    const Tensor& yv = t.val(y);
    int zeros = 0;
    for (size_t i = 0; i < yv.size(); ++i) {
        if (yv.v[i] == 0.0)
            ++zeros;
        else
            CHECK_THAT(yv.v[i], Catch::Matchers::WithinAbs(a.value.v[i] / 0.6, 1e-12));
    }
    CHECK(zeros > 5);
    CHECK(zeros < 55);
    a.zero_grad();
    t.backward(t.sum_all(y));
    for (size_t i = 0; i < yv.size(); ++i)
        CHECK(a.grad.v[i] == (yv.v[i] == 0.0 ? 0.0 : 1.0 / 0.6));
    // rate 0 is the identity
    Tape t0(false);
    Var same = t0.dropout(t0.constant(a.value), 0.0, drop_rng);
    CHECK(t0.val(same).v == a.value.v);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged", "[numerics]") {
    Parameter p("p", Tensor(2, 2, 1.5));
    Adam opt({&p}, AdamConfig{0.1});
    opt.zero_grad();
    opt.step();
    for (double x : p.value.v) CHECK(x == 1.5);
}

TEST_CASE("adam: first bias-corrected step moves by about lr", "[numerics]") {
    Parameter p("p", Tensor(1, 1, 2.0));
    Adam opt({&p}, AdamConfig{0.1});
    opt.zero_grad();
    p.grad.v[0] = 1.0;
    opt.step();
    CHECK_THAT(p.value.v[0], Catch::Matchers::WithinAbs(1.9, 1e-6));
}

TEST_CASE("adam: converges on a quadratic bowl", "[numerics]") {
    Parameter p("p", Tensor::from_rows(1, 2, {3.0, -2.0}));
    Adam opt({&p}, AdamConfig{0.05});
    for (int i = 0; i < 500; ++i) {
        opt.zero_grad();
        p.grad.v[0] = 2.0 * (p.value.v[0] - 0.5);
        p.grad.v[1] = 2.0 * (p.value.v[1] + 1.0);
        opt.step();
    }
    CHECK(std::abs(p.value.v[0] - 0.5) < 1e-6);
    CHECK(std::abs(p.value.v[1] + 1.0) < 1e-6);
}

TEST_CASE("adam: non-finite gradient aborts with the parameter name", "[numerics]") {
    Parameter p("culprit", Tensor(1, 1, 0.0));
    Adam opt({&p});
    p.grad.v[0] = std::nan("");
    try {
        opt.step();
        FAIL("expected numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("culprit") != std::string::npos);
    }
}

TEST_CASE("tensor invariants: finite checks and shape guards", "[numerics]") {
    Tensor t(2, 2, 1.0);
    CHECK(t.all_finite());
    t.at(1, 1) = std::nan("");
    CHECK(!t.all_finite());
    Tape tp(false);
    CHECK_THROWS_AS(tp.add(tp.constant(Tensor(2, 2)), tp.constant(Tensor(2, 3))), Error);
    CHECK_THROWS_AS(tp.matmul(tp.constant(Tensor(2, 2)), tp.constant(Tensor(3, 2))), Error);
}
