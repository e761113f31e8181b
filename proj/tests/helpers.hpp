#pragma once

#include "dpos/models.hpp"

#include <cmath>

namespace testutil {

inline dpos::Vector v2(double a, double b) {
    dpos::Vector v(2);
    v << a, b;
    return v;
}

inline dpos::Vector v3(double a, double b, double c) {
    dpos::Vector v(3);
    v << a, b, c;
    return v;
}

inline dpos::SystemDef model(dpos::ModelName name, std::map<std::string, double> params = {}) {
    return dpos::make_model({name, std::move(params), {}});
}

inline dpos::SystemDef pendulum(double k, double u = 0.0) {
    return model(dpos::ModelName::Pendulum, {{"k", k}, {"u", u}});
}

}  // namespace testutil
