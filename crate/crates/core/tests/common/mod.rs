#![allow(dead_code)]

use std::f64::consts::PI;

use channelfj::{matched_parameters, Channel, Curve, Polynomial, Section, Twist, Vec3};

pub const A: f64 = 0.25;
pub const B: f64 = 1.0 / 6.0;

pub fn helix() -> Curve {
    Curve::helix(A, B).unwrap()
}

/// Helix a = 1/4, b = 1/6 with a section twisted at ω = 4.
pub fn helix_channel(section: Section) -> Channel {
    Channel::new(helix(), section, Twist::twist(4.0), 1.0).unwrap()
}

pub fn fig3() -> Channel {
    helix_channel(Section::ellipse(1.0 / 6.0, 0.1).unwrap())
}

pub fn fig5() -> Channel {
    helix_channel(Section::rectangle(1.0 / 6.0, 0.1).unwrap())
}

/// The three matched sections for cardioid radius `r`, in the order
/// ellipse, rectangle, cardioid.
pub fn matched_sections(r: f64) -> [Section; 3] {
    let m = matched_parameters(r).unwrap();
    [Section::ellipse(m.r1, m.r2).unwrap(), Section::rectangle(m.d1, m.d2).unwrap(), Section::cardioid(r).unwrap()]
}

/// Circle of radius 1/4 with twist ω = 4.
pub fn circle_channel(section: Section) -> Channel {
    Channel::new(Curve::circle(0.25).unwrap(), section, Twist::twist(4.0), 1.0).unwrap()
}

pub fn straight(section: Section, length: f64, bulk_d: f64) -> Channel {
    let curve = Curve::line(Some(Vec3::new(0.0, 1.0, 0.0))).with_domain(0.0, length).unwrap();
    Channel::new(curve, section, Twist::identity(), bulk_d).unwrap()
}

pub fn with_offsets(ch: &Channel, p: Vec<f64>, q: Vec<f64>) -> Channel {
    let omega = ch.transport().omega;
    ch.with_transport(Twist::new(omega, Polynomial::new(p), Polynomial::new(q)))
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn quarter_turn() -> (f64, f64) {
    (0.0, PI / 2.0)
}

/// Indices of strict local minima and maxima of a sampled profile.
pub fn extrema(y: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut min = Vec::new();
    let mut max = Vec::new();
    for i in 1..y.len() - 1 {
        if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            min.push(i);
        }
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            max.push(i);
        }
    }
    (min, max)
}
