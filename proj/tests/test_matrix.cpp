#include "test_helpers.hpp"

using namespace qdl;
using qdl::testing::random_density;
using qdl::testing::random_hermitian;
using qdl::testing::random_matrix;

TEST_CASE("pauli operators have their textbook entries", "[matrix]") {
    const auto x = pauli(Pauli::X);
    CHECK(x.at(0, 1).re == 1.0);
    CHECK(x.at(1, 0).re == 1.0);
    CHECK(x.at(0, 0).re == 0.0);

    const auto y = pauli(Pauli::Y);
    CHECK(y.at(0, 1).im == -1.0);
    CHECK(y.at(1, 0).im == 1.0);

    const auto z = pauli(Pauli::Z);
    CHECK(z.at(0, 0).re == 1.0);
    CHECK(z.at(1, 1).re == -1.0);

    // Z Z = identity
    CHECK(max_abs_diff(mul(z, z), ComplexMatrix<double>::identity(2)) == 0.0);

    // sigma_pm = (sigma_x +- i sigma_y)/2
    ComplexMatrix<double> sp(2), sm(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            sp.at(i, j) = (x.at(i, j) + Cd{0, 1} * y.at(i, j)) * 0.5;
            sm.at(i, j) = (x.at(i, j) + Cd{0, -1} * y.at(i, j)) * 0.5;
        }
    CHECK(max_abs_diff(sp, pauli(Pauli::Plus)) == 0.0);
    CHECK(max_abs_diff(sm, pauli(Pauli::Minus)) == 0.0);
}

TEST_CASE("sigma_plus raises the ground state to the excited state", "[matrix]") {
    // Plus |g><g| Plus^dag = |e><e| in the index-0-excited convention
    const auto plus = pauli(Pauli::Plus);
    ComplexMatrix<double> t(2), r(2);
    mul_into(t, plus, ground_state<double>().matrix());
    mul_adjoint_into(r, t, plus);
    CHECK(max_abs_diff(r, excited_state<double>().matrix()) == 0.0);
}

TEST_CASE("dissipator on known inputs", "[matrix]") {
    const auto sz = pauli(Pauli::Z);

    SECTION("sigma_z eigenstate is dark") {
        const auto d = dissipator(sz, excited_state<double>());
        CHECK(max_abs(d) <= 1e-15);
    }
    SECTION("coherence flips sign under sigma_z monitoring") {
        ComplexMatrix<double> m(2);
        m.at(0, 0) = {0.5, 0.0};
        m.at(0, 1) = {0.5, 0.0};
        m.at(1, 0) = {0.5, 0.0};
        m.at(1, 1) = {0.5, 0.0};
        const auto d = dissipator(sz, DensityMatrix<double>::normalized(m));
        CHECK(d.at(0, 1).re == Catch::Approx(-1.0).margin(1e-14));
        CHECK(d.at(1, 0).re == Catch::Approx(-1.0).margin(1e-14));
        CHECK(std::fabs(d.at(0, 0).re) <= 1e-14);
        CHECK(std::fabs(d.at(1, 1).re) <= 1e-14);
    }
    SECTION("decay channel moves excited to ground") {
        const auto d = dissipator(pauli(Pauli::Minus), excited_state<double>());
        CHECK(d.at(0, 0).re == Catch::Approx(-1.0));
        CHECK(d.at(1, 1).re == Catch::Approx(1.0));
        CHECK(std::fabs(d.at(0, 1).re) + std::fabs(d.at(0, 1).im) <= 1e-15);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(dissipator(ComplexMatrix<double>(3), excited_state<double>()),
                        DimensionError);
    }
}

TEST_CASE("backaction on known inputs", "[matrix]") {
    const auto sz = pauli(Pauli::Z);
    SECTION("maximally mixed state is pushed along sigma_z") {
        const auto h = backaction(sz, DensityMatrix<double>::maximally_mixed(2));
        CHECK(max_abs_diff(h, sz) <= 1e-15);
    }
    SECTION("eigenstate gives zero") {
        const auto h = backaction(sz, excited_state<double>());
        CHECK(max_abs(h) <= 1e-15);
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(backaction(ComplexMatrix<double>(4), excited_state<double>()),
                        DimensionError);
    }
}

TEST_CASE("dissipator and backaction are traceless and Hermitian for random inputs",
          "[matrix]") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = trial % 2 == 0 ? 2 : 4;
        const auto c = random_matrix(dim, rng);
        const auto rho = random_density(dim, rng);
        const auto d = dissipator(c, rho);
        const auto h = backaction(c, rho);
        CHECK(std::fabs(trace(d).re) <= 1e-12);
        CHECK(std::fabs(trace(d).im) <= 1e-12);
        CHECK(std::fabs(trace(h).re) <= 1e-12);
        CHECK(std::fabs(trace(h).im) <= 1e-12);
        CHECK(hermiticity_deviation(d) <= 1e-12);
        CHECK(hermiticity_deviation(h) <= 1e-12);
    }
}

TEST_CASE("expectation values", "[matrix]") {
    const Observable<double> oz(pauli(Pauli::Z));
    const Observable<double> ox(pauli(Pauli::X));

    CHECK(expectation(oz, excited_state<double>()) == 1.0);
    CHECK(expectation(ox, DensityMatrix<double>::maximally_mixed(2)) == 0.0);

    ComplexMatrix<double> plus_state(2);
    plus_state.at(0, 0) = plus_state.at(0, 1) = plus_state.at(1, 0) =
        plus_state.at(1, 1) = {0.5, 0.0};
    CHECK(expectation(oz, DensityMatrix<double>::normalized(plus_state)) == 0.0);

    Rng rng(1);
    CHECK_THROWS_AS(expectation(oz, random_density(4, rng)), DimensionError);
}

TEST_CASE("expectation is linear in both arguments", "[matrix]") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_hermitian(2, rng);
        const auto b = random_hermitian(2, rng);
        const auto rho1 = random_density(2, rng);
        const auto rho2 = random_density(2, rng);
        const double alpha = rng.uniform(-2.0, 2.0);

        ComplexMatrix<double> combo = a;
        add_scaled(combo, alpha, b);
        const Observable<double> oc(hermitized(combo)), oa(a), ob(b);
        CHECK(expectation(oc, rho1) ==
              Catch::Approx(expectation(oa, rho1) + alpha * expectation(ob, rho1))
                  .margin(1e-12));

        // mixing states: rho = (rho1 + rho2)/2
        ComplexMatrix<double> mix = rho1.matrix();
        mix += rho2.matrix();
        const auto rho_mix = DensityMatrix<double>::normalized(mix);
        CHECK(expectation(oa, rho_mix) ==
              Catch::Approx(0.5 * (expectation(oa, rho1) + expectation(oa, rho2)))
                  .margin(1e-12));
    }
}

TEST_CASE("tensor and partial trace", "[matrix]") {
    SECTION("identity tensor identity") {
        const auto i4 = tensor(ComplexMatrix<double>::identity(2),
                               ComplexMatrix<double>::identity(2));
        CHECK(max_abs_diff(i4, ComplexMatrix<double>::identity(4)) == 0.0);
    }
    SECTION("separable state reduces to its factors") {
        Rng rng(3);
        const auto ra = random_density(2, rng);
        const auto rb = random_density(2, rng);
        const auto joint = tensor(ra.matrix(), rb.matrix());
        CHECK(max_abs_diff(partial_trace(joint, 0, {2, 2}), ra.matrix()) <= 1e-14);
        CHECK(max_abs_diff(partial_trace(joint, 1, {2, 2}), rb.matrix()) <= 1e-14);
    }
    SECTION("Bell state reduces to maximally mixed on either side") {
        ComplexMatrix<double> bell(4);
        // (|eg> + |ge>)/sqrt2, indices 1 and 2
        bell.at(1, 1) = bell.at(2, 2) = bell.at(1, 2) = bell.at(2, 1) = {0.5, 0.0};
        for (std::size_t keep : {0u, 1u}) {
            const auto red = partial_trace(bell, keep, {2, 2});
            CHECK(max_abs_diff(red, ComplexMatrix<double>::identity(2) * 0.5) <= 1e-14);
        }
    }
    SECTION("partial_trace(tensor(a,b)) = a Tr(b) for arbitrary matrices") {
        Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = random_matrix(2, rng);
            const auto b = random_matrix(3, rng);
            const auto red = partial_trace(tensor(a, b), 0, {2, 3});
            ComplexMatrix<double> expect(2);
            add_cscaled(expect, trace(b), a);
            CHECK(max_abs_diff(red, expect) <= 1e-12);
        }
    }
    SECTION("dims must multiply to the full dimension") {
        CHECK_THROWS_AS(partial_trace(ComplexMatrix<double>(6), 0, {2, 2}),
                        DimensionError);
        CHECK_THROWS_AS(partial_trace(ComplexMatrix<double>(4), 2, {2, 2}), IndexError);
    }
}

TEST_CASE("density matrix construction normalizes", "[matrix]") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rho = random_density(trial % 2 ? 2 : 8, rng);
        CHECK(std::fabs(trace(rho.matrix()).re - 1.0) <= 1e-12);
        CHECK(hermiticity_deviation(rho.matrix()) <= 1e-12);
        CHECK(positivity_ok(rho));
    }
    CHECK_THROWS_AS(DensityMatrix<double>::normalized(ComplexMatrix<double>(2)),
                    NumericError);
}

TEST_CASE("hermitian eigenvalues via the real embedding", "[matrix]") {
    SECTION("2x2 closed form") {
        ComplexMatrix<double> m(2);
        m.at(0, 0) = {1.0, 0.0};
        m.at(1, 1) = {-1.0, 0.0};
        m.at(0, 1) = {0.0, 2.0};
        m.at(1, 0) = {0.0, -2.0};
        const auto eig = hermitian_eigenvalues(m);
        CHECK(eig[0] == Catch::Approx(-std::sqrt(5.0)));
        CHECK(eig[1] == Catch::Approx(std::sqrt(5.0)));
    }
    SECTION("matches trace and det on random 4x4") {
        Rng rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            const auto m = random_hermitian(4, rng);
            const auto eig = hermitian_eigenvalues(m);
            double sum = 0.0;
            for (double e : eig) sum += e;
            CHECK(sum == Catch::Approx(trace(m).re).margin(1e-9));
        }
    }
    SECTION("flags a negative eigenvalue") {
        ComplexMatrix<double> m(2);
        m.at(0, 0) = {1.1, 0.0};
        m.at(1, 1) = {-0.1, 0.0};
        const auto rho = DensityMatrix<double>::unchecked(std::move(m));
        CHECK_FALSE(positivity_ok(rho));
        CHECK(positivity_ok(rho, 0.2));
    }
}
