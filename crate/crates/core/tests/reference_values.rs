//! Frozen 30-digit values from `tests/data/reference_values.py` (mpmath).

#![allow(clippy::excessive_precision)]

use kirchhoff_core::constants::{m2_p_plus_1_alternative, m_constant, s1_recursion, s_constant};
use kirchhoff_core::quadrature::{beta_oracle, l_constant, DEFAULT_TOL};
use kirchhoff_core::GroundState;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        rel(got, want) <= tol,
        "{what}: got {got}, want {want}, rel {:.2e}",
        rel(got, want)
    );
}

#[test]
fn l_constants_and_beta() {
    close(
        beta_oracle(0.25, 0.5).unwrap(),
        5.2441151085842396209,
        1e-13,
        "B(1/4,1/2)",
    );
    close(
        l_constant(3.0, 0.0, DEFAULT_TOL).unwrap().value,
        1.3110287771460598964,
        1e-12,
        "L_{3,0}",
    );
    close(
        l_constant(2.0, 0.0, DEFAULT_TOL).unwrap().value,
        1.402182105325454253,
        1e-12,
        "L_{2,0}",
    );
    close(
        l_constant(1.5, 0.0, DEFAULT_TOL).unwrap().value,
        1.4716375921623523198,
        1e-12,
        "L_{1.5,0}",
    );
}

#[test]
fn ground_state_values() {
    for (p, xi) in [
        (1.5, 117.25827504802178307),
        (2.0, 11.796687938969539706),
        (3.0, 3.7081493546027438117),
    ] {
        close(
            GroundState::new(p).unwrap().xi(),
            xi,
            1e-12,
            &format!("xi_{p}"),
        );
    }
    let g3 = GroundState::new(3.0).unwrap();
    close(
        g3.time_map_x_of_w(g3.xi() / 2.0).unwrap(),
        0.19191395793491000589,
        1e-13,
        "x(xi/2)",
    );
    close(
        g3.evaluate_w(0.25).unwrap(),
        2.3865436135378712711,
        1e-13,
        "W_3(1/4)",
    );
    close(
        g3.evaluate_w(0.3).unwrap(),
        2.8086659594988900195,
        1e-13,
        "W_3(0.3)",
    );
    let g2 = GroundState::new(2.0).unwrap();
    close(
        g2.evaluate_w(0.25).unwrap(),
        7.9228758341623995605,
        1e-13,
        "W_2(1/4)",
    );
}

#[test]
fn s_values() {
    let g = GroundState::new(3.0).unwrap();
    close(
        s_constant(&g, 1, 1.0).unwrap().value,
        0.36063493558832099148,
        1e-10,
        "S_{1,1}",
    );
    close(
        s_constant(&g, 3, 3.0).unwrap().value,
        0.61730240242213188835,
        1e-10,
        "S_{3,3}",
    );
    close(
        s_constant(&g, 2, 4.0).unwrap().value,
        5.115072111415300846,
        1e-10,
        "S_{2,4}",
    );
    close(
        s1_recursion(&g, 3.0).unwrap().value,
        g.xi(),
        1e-15,
        "S_{1,p}",
    );
}

#[test]
fn m_values() {
    let g3 = GroundState::new(3.0).unwrap();
    let cases = [
        (1, 3.0, 9.7229810276795727643),
        (2, 4.0, 16.81928980957292531),
        (2, 7.0, 637.54740681218478186),
        (1, 2.0, std::f64::consts::PI),
        (2, 3.0, 5.2800980895212066184),
        (3, 3.0, 3.0586566204420235632),
        (4, 3.0, 1.8674642630681706257),
        (5, 3.0, 1.1913964615469827471),
    ];
    for (n, q, want) in cases {
        close(
            m_constant(&g3, n, q).unwrap().value,
            want,
            1e-11,
            &format!("M_{{{n},{q}}}, p=3"),
        );
    }
    let g2 = GroundState::new(2.0).unwrap();
    close(
        m_constant(&g2, 2, 4.0).unwrap().value,
        1825.1019413811005374,
        1e-11,
        "M_{2,4}, p=2",
    );
    close(
        m_constant(&g2, 2, 3.0).unwrap().value,
        179.1878652022322306,
        1e-11,
        "M_{2,3}, p=2",
    );
}

#[test]
fn rejected_m2_expression_value() {
    let g = GroundState::new(3.0).unwrap();
    close(
        m2_p_plus_1_alternative(&g).unwrap(),
        10.264435510866990905,
        1e-11,
        "alternative M_{2,4}",
    );
}
