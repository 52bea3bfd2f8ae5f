#include "mmdiag/battery.hpp"

#include <sstream>

namespace mmdiag::battery {

namespace {

// Body of one switched submodule: a cell with a parallel RC branch behind a
// full bridge, plus local current and voltage sensors.
void emit_sm_body(std::ostream& os, structure::Approach a, const std::string& ind) {
    bool boolean = a == structure::Approach::Boolean;
    os << ind << "// Mode variables\n"
       << ind << "forward : boolean;\n"
       << ind << "backward : boolean;\n"
       << ind << "invariant !(forward & backward);\n"
       << ind << "// Faults\n";
    if (boolean) {
        os << ind << "F_cell : boolean;\n"
           << ind << "F_i_cell : boolean;\n"
           << ind << "F_v_cell : boolean;\n";
    } else {
        os << ind << "constant f_cell : real;\n"
           << ind << "constant f_i_cell : real;\n"
           << ind << "constant f_v_cell : real;\n";
    }
    os << ind << "// Parameters and sensor signals\n"
       << ind << "constant Cp : real;\n"
       << ind << "constant Rp : real;\n"
       << ind << "constant R0 : real;\n"
       << ind << "constant v_ocv : real;\n"
       << ind << "constant y_i_cell : real;\n"
       << ind << "constant y_v_cell : real;\n"
       << ind << "// Unknowns\n"
       << ind << "v_p : real;\n"
       << ind << "v_p_der : real;\n"
       << ind << "v_cell : real;\n"
       << ind << "i_cell : real;\n"
       << ind << "v_sm : real;\n"
       << ind << "i_pack : real;\n"
       << ind << "// Equations of a cell\n"
       << ind << "e1 : v_p_der = i_cell / Cp - v_p / (Rp * Cp);\n";
    if (boolean)
        os << ind << "if !F_cell then e2 : v_cell = v_p + R0 * i_cell + v_ocv end;\n";
    else
        os << ind << "e2 : v_cell = v_p + R0 * i_cell + v_ocv + f_cell;\n";
    os << ind << "e3 : v_p_der = der(v_p);\n"
       << ind << "e4 : v_sm = if forward then v_cell else if backward then - v_cell else 0.;\n"
       << ind << "e5 : i_cell = if forward then i_pack else if backward then - i_pack else 0.;\n";
    if (boolean) {
        os << ind << "if !F_i_cell then e6 : y_i_cell = i_cell end;\n"
           << ind << "if !F_v_cell then e7 : y_v_cell = v_cell end;\n";
    } else {
        os << ind << "e6 : y_i_cell = i_cell + f_i_cell;\n"
           << ind << "e7 : y_v_cell = v_cell + f_v_cell;\n";
    }
}

}  // namespace

std::string generate(std::size_t n, structure::Approach a, Flavor flavor) {
    std::ostringstream os;
    if (flavor == Flavor::SingleSM) {
        os << "// One switched battery submodule\n";
        emit_sm_body(os, a, "");
        return os.str();
    }

    bool boolean = a == structure::Approach::Boolean;
    os << "// Battery pack of N switched submodules in series\n"
       << "param N = " << n << ";\n\n"
       << "module SM()\n";
    emit_sm_body(os, a, "  ");
    os << "end;\n\n"
       << "// System architecture\n"
       << "instance c[1..N] : SM();\n"
       << "v_pack : real;\n"
       << "i_pack : real;\n"
       << "constant y_i_pack : real;\n"
       << "constant y_v_pack : real;\n";
    if (boolean)
        os << "F_i_pack : boolean;\n"
           << "F_v_pack : boolean;\n";
    else
        os << "constant f_i_pack : real;\n"
           << "constant f_v_pack : real;\n";
    os << "g1 : v_pack = sum { k in 1 .. N : c[k].v_sm };\n"
       << "foreach k in 1 .. N do\n"
       << "  g2[k] : i_pack = c[k].i_pack;\n"
       << "done;\n";
    if (boolean)
        os << "if !F_i_pack then g3 : y_i_pack = i_pack end;\n"
           << "if !F_v_pack then g4 : y_v_pack = v_pack end;\n";
    else
        os << "g3 : y_i_pack = i_pack + f_i_pack;\n"
           << "g4 : y_v_pack = v_pack + f_v_pack;\n";
    return os.str();
}

}  // namespace mmdiag::battery
