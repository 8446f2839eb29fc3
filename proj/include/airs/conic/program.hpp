#pragma once

#include "airs/common.hpp"

#include <ostream>

namespace airs::conic {

/// Real-linear functional over the program's variable space:
///   sum_b Re tr(A_b X_b)  +  sum_v Re(c_v^H u_v)  +  a^T s  +  constant
/// with Hermitian A_b. Empty coefficient slots mean zero.
struct LinearForm {
    std::vector<CMat> herm;
    std::vector<CVec> vec;
    RVec scalar;
    double constant = 0;
};

enum class Rel { Le, Eq };  ///< form <= 0 or form == 0

struct LinearCon {
    LinearForm form;
    Rel rel = Rel::Le;
    std::string name;
};

/// Convex quadratic constraint (PSD Q_v):
///   sum_v ( u_v^H Q_v u_v + 2 Re(q_v^H u_v) )  +  lin(x)  <=  0
struct QuadCon {
    std::vector<CMat> Q;
    std::vector<CVec> q;
    LinearForm lin;
    std::string name;
};

/// Exponential-of-scalar constraint:  e^{s_k} <= w(x)  with affine w.
struct ExpCon {
    int scalar_index = -1;
    LinearForm w;
    std::string name;
};

/// Solver-agnostic convex program over Hermitian PSD matrix blocks, free
/// complex (or real) vector blocks and free real scalars. The objective is
/// maximized. Variable `*_scale` entries are magnitude hints used to
/// precondition the data; they do not change the mathematical program.
struct Program {
    std::vector<int> herm_dims;
    struct VecBlock {
        int dim = 0;
        bool real_only = false;
    };
    std::vector<VecBlock> vec_blocks;
    int num_scalars = 0;

    std::vector<double> herm_scale;  ///< per herm block, defaults to 1
    std::vector<double> vec_scale;   ///< per vec block, defaults to 1

    LinearForm objective;  ///< maximized
    std::vector<LinearCon> linear;
    std::vector<QuadCon> quadratic;
    std::vector<ExpCon> expcons;

    int add_herm_block(int dim, double scale = 1.0) {
        herm_dims.push_back(dim);
        herm_scale.push_back(scale);
        return static_cast<int>(herm_dims.size()) - 1;
    }
    int add_vec_block(int dim, bool real_only = false, double scale = 1.0) {
        vec_blocks.push_back({dim, real_only});
        vec_scale.push_back(scale);
        return static_cast<int>(vec_blocks.size()) - 1;
    }
    int add_scalars(int count) {
        const int first = num_scalars;
        num_scalars += count;
        return first;
    }

    /// A zero functional shaped for this program.
    LinearForm form() const {
        LinearForm f;
        f.herm.resize(herm_dims.size());
        f.vec.resize(vec_blocks.size());
        f.scalar = RVec::Zero(num_scalars);
        return f;
    }

    /// Pins one entry of a Hermitian block: X(r,c) == value (value real when
    /// r == c; otherwise both real and imaginary parts are constrained).
    void pin_herm_entry(int block, int r, int c, cx value, const std::string& name) {
        const int d = herm_dims[block];
        LinearForm f = form();
        f.herm[block] = CMat::Zero(d, d);
        if (r == c) {
            f.herm[block](r, c) = 1.0;
            f.constant = -value.real();
            linear.push_back({f, Rel::Eq, name});
        } else {
            f.herm[block](r, c) = 0.5;
            f.herm[block](c, r) = 0.5;
            f.constant = -value.real();
            linear.push_back({f, Rel::Eq, name + "_re"});
            LinearForm fi = form();
            fi.herm[block] = CMat::Zero(d, d);
            fi.herm[block](r, c) = cx(0, 0.5);
            fi.herm[block](c, r) = cx(0, -0.5);
            fi.constant = -value.imag();
            linear.push_back({fi, Rel::Eq, name + "_im"});
        }
    }

    /// Pins one coordinate of a vector block: u(k) == value.
    void pin_vec_entry(int block, int k, cx value, const std::string& name) {
        const int d = vec_blocks[block].dim;
        LinearForm f = form();
        f.vec[block] = CVec::Zero(d);
        f.vec[block](k) = 1.0;  // Re(e_k^H u) = Re u_k
        f.constant = -value.real();
        linear.push_back({f, Rel::Eq, name + "_re"});
        if (!vec_blocks[block].real_only) {
            LinearForm fi = form();
            fi.vec[block] = CVec::Zero(d);
            fi.vec[block](k) = cx(0, 1);  // Re((j e_k)^H u) = Im u_k
            fi.constant = -value.imag();
            linear.push_back({fi, Rel::Eq, name + "_im"});
        }
    }

    /// Human-readable dump for offline inspection. Coefficient matrices are
    /// printed in full for blocks of dimension <= 8, otherwise summarized by
    /// their Frobenius norm.
    void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit, NumericalFailure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::IterationLimit: return "IterationLimit";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<CMat> herm;
    std::vector<CVec> vec;
    RVec scalars;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double gap_bound = std::numeric_limits<double>::infinity();
    double max_violation = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
    std::string message;

    bool ok() const { return status == SolveStatus::Optimal; }
};

struct SolverSettings {
    double eps_feas = 1e-8;
    double eps_gap = 1e-8;
    int max_newton = 2000;
    double t0 = 1.0;
    double mu = 20.0;
};

namespace detail {
inline void dump_form(std::ostream& os, const LinearForm& f) {
    for (std::size_t b = 0; b < f.herm.size(); ++b) {
        if (f.herm[b].size() == 0) continue;
        if (f.herm[b].rows() <= 8)
            os << "    herm[" << b << "]:\n" << f.herm[b] << "\n";
        else
            os << "    herm[" << b << "]: |A|_F = " << f.herm[b].norm() << "\n";
    }
    for (std::size_t v = 0; v < f.vec.size(); ++v) {
        if (f.vec[v].size() == 0) continue;
        if (f.vec[v].size() <= 8)
            os << "    vec[" << v << "]: " << f.vec[v].transpose() << "\n";
        else
            os << "    vec[" << v << "]: |c| = " << f.vec[v].norm() << "\n";
    }
    if (f.scalar.size() > 0 && f.scalar.any())
        os << "    scalar: " << f.scalar.transpose() << "\n";
    os << "    constant: " << f.constant << "\n";
}
}  // namespace detail

inline void Program::dump(std::ostream& os) const {
    os << "conic program\n";
    for (std::size_t b = 0; b < herm_dims.size(); ++b)
        os << "  herm block " << b << ": " << herm_dims[b] << " x " << herm_dims[b]
           << " (psd, scale " << herm_scale[b] << ")\n";
    for (std::size_t v = 0; v < vec_blocks.size(); ++v)
        os << "  vec block " << v << ": dim " << vec_blocks[v].dim
           << (vec_blocks[v].real_only ? " (real)" : " (complex)") << " (scale " << vec_scale[v]
           << ")\n";
    os << "  scalars: " << num_scalars << "\n";
    os << "maximize:\n";
    detail::dump_form(os, objective);
    for (const auto& c : linear) {
        os << (c.rel == Rel::Le ? "subject to (<= 0): " : "subject to (== 0): ") << c.name << "\n";
        detail::dump_form(os, c.form);
    }
    for (const auto& c : quadratic) {
        os << "subject to (quad <= 0): " << c.name << "\n";
        for (std::size_t v = 0; v < c.Q.size(); ++v)
            if (c.Q[v].size() > 0) os << "    Q[" << v << "] |Q|_F = " << c.Q[v].norm() << "\n";
        detail::dump_form(os, c.lin);
    }
    for (const auto& c : expcons) {
        os << "subject to exp(s[" << c.scalar_index << "]) <= w: " << c.name << "\n";
        detail::dump_form(os, c.w);
    }
}

}  // namespace airs::conic
