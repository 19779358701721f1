//! CPLEX LP text export, for inspecting models in external tools.

use alloc::string::String;
use core::fmt::{self, Write};

use super::{LinearModel, Sense, VarId};

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.()".contains(c) { c } else { '_' })
        .collect()
}

fn term<W: Write>(out: &mut W, first: bool, a: f64, name: &str) -> fmt::Result {
    let sign = if a < 0.0 { " -" } else if first { "" } else { " +" };
    let mag = a.abs();
    if mag == 1.0 {
        write!(out, "{sign} {name}")
    } else {
        write!(out, "{sign} {mag:?} {name}")
    }
}

/// Writes `model` in CPLEX LP format. Variables listed in `binaries` go to
/// the `Binaries` section.
pub fn write_lp<W: Write>(model: &LinearModel, binaries: &[VarId], out: &mut W) -> fmt::Result {
    let names: alloc::vec::Vec<String> = model.vars().iter().map(|v| clean(&v.name)).collect();
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    let mut first = true;
    for (v, name) in model.vars().iter().zip(&names) {
        if v.objective != 0.0 {
            term(out, first, v.objective, name)?;
            first = false;
        }
    }
    if model.offset() != 0.0 || first {
        let c = model.offset();
        let sign = if c < 0.0 { " -" } else if first { "" } else { " +" };
        write!(out, "{sign} {:?}", c.abs())?;
    }
    writeln!(out)?;

    writeln!(out, "Subject To")?;
    for c in model.constraints() {
        write!(out, " {}:", clean(&c.name))?;
        if c.coeffs.is_empty() {
            write!(out, " 0 {}", names.first().map_or("", |n| n.as_str()))?;
        }
        for (k, &(v, a)) in c.coeffs.iter().enumerate() {
            term(out, k == 0, a, &names[v.0])?;
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {:?}", c.rhs)?;
    }

    writeln!(out, "Bounds")?;
    for (v, name) in model.vars().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {name} free")?,
            (true, true) if v.lower == v.upper => writeln!(out, " {name} = {:?}", v.lower)?,
            (true, true) => writeln!(out, " {:?} <= {name} <= {:?}", v.lower, v.upper)?,
            (true, false) if v.lower == 0.0 => {}
            (true, false) => writeln!(out, " {name} >= {:?}", v.lower)?,
            (false, true) => writeln!(out, " -inf <= {name} <= {:?}", v.upper)?,
        }
    }
    if !binaries.is_empty() {
        writeln!(out, "Binaries")?;
        for v in binaries {
            writeln!(out, " {}", names[v.0])?;
        }
    }
    writeln!(out, "End")
}
