#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "netobs/model_io.hpp"
#include "netobs/sensitivity.hpp"
#include "netobs/sensor_select.hpp"

using namespace netobs;
using namespace netobs::testing;

namespace {

ContinuousModel scalar_linear(double lambda) {
    Matrix A(1, 1);
    A << lambda;
    return make_linear_model(A);
}

StateVector one() {
    StateVector x(1);
    x << 1.0;
    return x;
}

}  // namespace

TEST_CASE("scalar step jacobians") {
    const StateVector x0 = one();
    const double h = 0.1;

    const DiscreteModel be{scalar_linear(-1.0), Scheme::BE, h};
    CHECK(step_jacobian(be, step(be, x0), x0)(0, 0) ==
          doctest::Approx(1.0 / 1.1).epsilon(1e-12));

    const DiscreteModel ti{scalar_linear(-1.0), Scheme::TI, h};
    CHECK(step_jacobian(ti, step(ti, x0), x0)(0, 0) ==
          doctest::Approx(0.95 / 1.05).epsilon(1e-12));

    // For a linear field the step map is linear, so its derivative equals
    // the map itself: dx1/dx0 = x1 / x0.
    const DiscreteModel irk{scalar_linear(-1.0), Scheme::IRK, h};
    const StepResult r = step(irk, x0);
    CHECK(step_jacobian(irk, r, x0)(0, 0) == doctest::Approx(r.x_next[0]).epsilon(1e-12));
}

TEST_CASE("N=1 stack is the signed output matrix") {
    const DiscreteModel dm{scalar_linear(-1.0), Scheme::BE, 0.1};
    const JacobianStack stack = stack_output_jacobian(dm, one(), 1, Matrix::Identity(1, 1), true);
    CHECK(stack.full(0, 0) == -1.0);
    const Matrix fd = finite_difference_stack(dm, one(), 1, Matrix::Identity(1, 1), true);
    CHECK(fd(0, 0) == -1.0);
}

TEST_CASE("scalar BE stack column") {
    const DiscreteModel dm{scalar_linear(-1.0), Scheme::BE, 0.1};
    const JacobianStack stack = stack_output_jacobian(dm, one(), 3, Matrix::Identity(1, 1), true);
    REQUIRE(stack.full.rows() == 3);
    CHECK(stack.full(0, 0) == doctest::Approx(-1.0));
    CHECK(stack.full(1, 0) == doctest::Approx(-1.0 / 1.1).epsilon(1e-12));
    CHECK(stack.full(2, 0) == doctest::Approx(-1.0 / 1.21).epsilon(1e-12));

    const Matrix fd = finite_difference_stack(dm, one(), 3, Matrix::Identity(1, 1), true);
    CHECK(matrix_rel_err(stack.full, fd) < 1e-8);
}

TEST_CASE("analytic stacks match finite differences on h2o2_mini") {
    const LoadedModel lm = load_model("models/h2o2_mini.toml");
    SplitRng rng(23);
    StateVector x0(lm.model.n);
    for (int i = 0; i < lm.model.n; ++i) x0[i] = 1.0 + rng.uniform();
    const int N = 20;
    for (Scheme scheme : {Scheme::BE, Scheme::TI, Scheme::IRK}) {
        const DiscreteModel dm{lm.model, scheme, lm.recommended_h};
        const Matrix C = Matrix::Identity(lm.model.n, lm.model.n);
        const JacobianStack stack = stack_output_jacobian(dm, x0, N, C, true);
        const Matrix fd = finite_difference_stack(dm, x0, N, C, true);
        INFO(scheme_name(scheme));
        CHECK(matrix_rel_err(stack.full, fd) < 1e-5);
    }
}

TEST_CASE("analytic stack matches finite differences on the hill toy") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const DiscreteModel dm{lm.model, Scheme::IRK, 0.05};
    const StateVector x0 = StateVector::Constant(5, 0.4);
    Matrix C = Matrix::Zero(2, 5);
    C(0, 1) = 1.0;
    C(1, 3) = 1.0;
    const JacobianStack stack = stack_output_jacobian(dm, x0, 10, C, false);
    const Matrix fd = finite_difference_stack(dm, x0, 10, C, false);
    CHECK(matrix_rel_err(stack.full, fd) < 1e-5);
}

TEST_CASE("kronecker identity: masked rows equal (I_N (x) C1) J2") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const DiscreteModel dm{lm.model, Scheme::IRK, 0.05};
    const StateVector x0 = StateVector::Constant(5, 0.35);
    const int N = 6;
    const int n = lm.model.n;

    SensorMask mask;
    mask.bits = {1, 0, 1, 0, 1};
    const Matrix C1 = mask_to_output_matrix(mask);

    const JacobianStack j1 = stack_output_jacobian(dm, x0, N, C1, false);
    const JacobianStack j2 = stack_output_jacobian(dm, x0, N, Matrix::Identity(n, n), false);

    for (int k = 0; k < N; ++k) {
        const Matrix expected = C1 * j2.full.middleRows(k * n, n);
        const Matrix actual = j1.full.middleRows(k * n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                CHECK(actual(i, j) == expected(i, j));  // bitwise
            }
        }
    }
}

TEST_CASE("signed stack is the exact negation of the unsigned stack") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const DiscreteModel dm{lm.model, Scheme::TI, 0.05};
    const StateVector x0 = StateVector::Constant(5, 0.45);
    Matrix C = Matrix::Zero(1, 5);
    C(0, 2) = 1.0;
    const JacobianStack pos = stack_output_jacobian(dm, x0, 5, C, false);
    const JacobianStack neg = stack_output_jacobian(dm, x0, 5, C, true);
    for (long i = 0; i < pos.full.rows(); ++i) {
        for (long j = 0; j < pos.full.cols(); ++j) {
            CHECK(neg.full(i, j) == -pos.full(i, j));
        }
    }
}

TEST_CASE("step jacobians approach identity as h -> 0") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const StateVector x0 = StateVector::Constant(5, 0.5);
    for (Scheme scheme : {Scheme::BE, Scheme::TI, Scheme::IRK}) {
        double defect_coarse = 0.0, defect_fine = 0.0;
        for (double h : {1e-2, 1e-3}) {
            const DiscreteModel dm{lm.model, scheme, h};
            const Matrix F = step_jacobian(dm, step(dm, x0), x0);
            const double defect = (F - Matrix::Identity(5, 5)).norm();
            if (h == 1e-2)
                defect_coarse = defect;
            else
                defect_fine = defect;
        }
        INFO(scheme_name(scheme));
        CHECK(defect_coarse < 0.1);
        // O(h): one decade in h shrinks the defect by roughly a decade.
        CHECK(defect_coarse / defect_fine == doctest::Approx(10.0).epsilon(0.25));
    }
}

TEST_CASE("stack blocks equal independently re-multiplied chains") {
    const LoadedModel lm = load_model("models/hill5.toml");
    const DiscreteModel dm{lm.model, Scheme::IRK, 0.04};
    const StateVector x0 = StateVector::Constant(5, 0.4);
    Matrix C = Matrix::Zero(2, 5);
    C(0, 0) = 1.0;
    C(1, 4) = 1.0;
    const int N = 7;
    const JacobianStack stack = stack_output_jacobian(dm, x0, N, C, false);
    REQUIRE(static_cast<int>(stack.step_factors.size()) == N - 1);
    for (int k = 1; k < N; ++k) {
        // Right-to-left association, the opposite of the builder's order.
        Matrix chain = stack.step_factors[0];
        for (int j = 1; j < k; ++j) chain = stack.step_factors[j] * Matrix(chain);
        const Matrix expected = C * chain;
        CHECK(matrix_rel_err(stack.full.middleRows(2 * k, 2), expected) < 1e-12);
    }
}

TEST_CASE("rank-deficient sensitivity raises") {
    const DiscreteModel dm{scalar_linear(10.0), Scheme::BE, 0.1};
    // I - h J = 1 - 0.1 * 10 = 0: the BE sensitivity matrix is singular.
    StepResult fake;
    fake.converged = true;
    fake.x_next = one();
    CHECK_THROWS_AS(step_jacobian(dm, fake, one()), SingularMatrixError);
    StepResult unconverged;
    unconverged.converged = false;
    CHECK_THROWS_AS(step_jacobian(dm, unconverged, one()), ContractError);
}
