#pragma once

#include "mfg/controls.hpp"
#include "mfg/measure_curve.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace mfg {

// "# grid d=1 L=2 n=15 T=1 K=12" followed by t,x1[,x2],weight rows.
void write_curve_csv(std::ostream& os, const MeasureCurve& curve);
// Reads the format above. The grid line is required; rows may come in any order.
MeasureCurve read_curve_csv(std::istream& is);

// Same grid line, then t,x1[,x2],u1[,u2] rows for k < K.
void write_control_csv(std::ostream& os, const ControlField& u);
ControlField read_control_csv(std::istream& is);

std::string grid_line(const StateGrid& g, const TimeGrid& t);

}  // namespace mfg
