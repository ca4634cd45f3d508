#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace rieszboost {

/// The four estimands: average treatment effect, average treatment effect on
/// the treated, average shift effect (treatment shifted by delta), and the
/// shift effect localized to treatments below a threshold.
enum class FunctionalKind { ate, att, ase, lase };

/// An estimand together with its parameters. delta is the treatment shift
/// for ase/lase; threshold is the localization cutoff for lase.
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::ate;
    double delta = 0.0;
    double threshold = 0.0;

    static FunctionalSpec ate() { return {FunctionalKind::ate, 0.0, 0.0}; }
    static FunctionalSpec att() { return {FunctionalKind::att, 0.0, 0.0}; }
    static FunctionalSpec ase(double delta) {
        FunctionalSpec f{FunctionalKind::ase, delta, 0.0};
        f.validate();
        return f;
    }
    static FunctionalSpec lase(double delta, double threshold) {
        FunctionalSpec f{FunctionalKind::lase, delta, threshold};
        f.validate();
        return f;
    }

    bool binary_treatment() const {
        return kind == FunctionalKind::ate || kind == FunctionalKind::att;
    }
    bool uses_delta() const {
        return kind == FunctionalKind::ase || kind == FunctionalKind::lase;
    }

    void validate() const {
        if (uses_delta() && (!(delta != 0.0) || !std::isfinite(delta))) {
            throw std::invalid_argument("FunctionalSpec: " + name() +
                                        " requires a nonzero finite delta");
        }
        if (kind == FunctionalKind::lase && !std::isfinite(threshold)) {
            throw std::invalid_argument("FunctionalSpec: lase requires a finite threshold");
        }
    }

    std::string name() const {
        switch (kind) {
            case FunctionalKind::ate: return "ate";
            case FunctionalKind::att: return "att";
            case FunctionalKind::ase: return "ase";
            case FunctionalKind::lase: return "lase";
        }
        return "?";
    }
};

inline FunctionalSpec parse_functional(const std::string& name, double delta, double threshold) {
    if (name == "ate") return FunctionalSpec::ate();
    if (name == "att") return FunctionalSpec::att();
    if (name == "ase") return FunctionalSpec::ase(delta);
    if (name == "lase") return FunctionalSpec::lase(delta, threshold);
    throw std::invalid_argument("unknown functional '" + name + "' (expected ate, att, ase, lase)");
}

/// The linear functional m(o, g) whose mean identifies the estimand when g
/// is the outcome regression. g is any callable (a, x) -> double.
template <typename G>
double m_eval(const FunctionalSpec& f, double a, std::span<const double> x, G&& g) {
    switch (f.kind) {
        case FunctionalKind::ate:
            return g(1.0, x) - g(0.0, x);
        case FunctionalKind::att:
            return a == 1.0 ? g(1.0, x) - g(0.0, x) : 0.0;
        case FunctionalKind::ase:
            return g(a + f.delta, x) - g(a, x);
        case FunctionalKind::lase:
            return a < f.threshold ? g(a + f.delta, x) - g(a, x) : 0.0;
    }
    throw std::logic_error("m_eval: unreachable");
}

}  // namespace rieszboost
