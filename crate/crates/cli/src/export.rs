//! Deterministic text exporters.

use plateau_core::linking::fmt_g9;
use plateau_core::{BoundarySystem, DensityTable, FaceComplex};
use serde::{Deserialize, Serialize};

use crate::scenario::Format;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exportable {
    Complex(FaceComplex),
    Loops(BoundarySystem),
    Density(DensityTable),
}

pub fn complex_csv(x: &FaceComplex) -> String {
    let d = &x.domain;
    let mut s = String::from("axis,i,j,k,c_x,c_y,c_z\n");
    for f in x.iter() {
        let c = f.center(d);
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f.axis,
            f.idx[0],
            f.idx[1],
            f.idx[2],
            fmt_g9(c[0]),
            fmt_g9(c[1]),
            fmt_g9(c[2])
        ));
    }
    s
}

pub fn export(obj: &Exportable, format: Format) -> Result<String, CliError> {
    let unsupported =
        |what: &str| Err(CliError::Schema(format!("format `{}` is not available for {what}", format.ext())));
    match (obj, format) {
        (Exportable::Complex(x), Format::Obj) => Ok(x.to_obj()),
        (Exportable::Complex(x), Format::Off) => Ok(x.to_off()),
        (Exportable::Complex(x), Format::Csv) => Ok(complex_csv(x)),
        (Exportable::Complex(x), Format::Txt) => Ok(x.to_text()),
        (Exportable::Loops(m), Format::Obj) => Ok(m.to_obj()),
        (Exportable::Loops(m), Format::Csv) => Ok(m.to_csv()),
        (Exportable::Loops(m), Format::Txt) => {
            Ok(m.components.iter().map(|l| l.to_txt()).collect::<Vec<_>>().join("\n"))
        }
        (Exportable::Loops(_), Format::Off) => unsupported("loops"),
        (Exportable::Density(t), Format::Csv) => Ok(t.to_csv()),
        (Exportable::Density(_), _) => unsupported("density tables"),
    }
}

/// Objects addressable as `fixture:<name>`.
pub fn fixture(name: &str) -> Result<Exportable, CliError> {
    use plateau_core::fixtures as fx;
    let pair = |(a, b)| BoundarySystem::new(vec![a, b]).map_err(|e| CliError::Schema(e.to_string()));
    Ok(match name {
        "hopf" => Exportable::Loops(pair(fx::hopf())?),
        "split" => Exportable::Loops(pair(fx::split_pair())?),
        "torus24" => Exportable::Loops(pair(fx::torus_link_24(64))?),
        "unit-circle" => Exportable::Loops(fx::unit_circle()),
        "unit-disk" => {
            let m = fx::unit_circle();
            let d = fx::domain_for(&m, 1.0 / 8.0, 2.0);
            Exportable::Complex(fx::cone_complex(&d, &m, [0.0; 3]))
        }
        "moebius" => Exportable::Complex(fx::moebius_fixture(1.0 / 16.0).1),
        _ => return Err(CliError::Schema(format!("unknown fixture `{name}`"))),
    })
}

pub fn load(spec: &str) -> Result<Exportable, CliError> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return fixture(name);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::Schema(format!("{spec}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{spec}: not a complex, loop system or density table ({e})")))
}
