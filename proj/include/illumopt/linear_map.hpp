#pragma once

#include "illumopt/types.hpp"

namespace illumopt {

// A linear operator known only through products with it and its adjoint.
class LinearMap {
public:
    virtual ~LinearMap() = default;
    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual void apply(const Vec& x, Vec& y) const = 0;          // y = A x
    virtual void apply_adjoint(const Vec& y, Vec& x) const = 0;  // x = A^T y
};

// Non-owning view of a dense matrix; products run on the OpenMP kernels.
class DenseView final : public LinearMap {
public:
    explicit DenseView(const Mat& a) : a_(&a) {}
    Index rows() const override { return a_->rows(); }
    Index cols() const override { return a_->cols(); }
    void apply(const Vec& x, Vec& y) const override;
    void apply_adjoint(const Vec& y, Vec& x) const override;

private:
    const Mat* a_;
};

}  // namespace illumopt
