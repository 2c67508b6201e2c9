//! Solves a small box-bounded linear program with the dense simplex and
//! prints its dual certificate.

use vr3c::lp::{solve_lp, LinearProgram};

fn main() -> Result<(), vr3c::LpError> {
    // minimize -3x - 2y - z  s.t.  x + y + z <= 2,  x + 2y = 1,  0 <= x, y, z <= 1
    let mut lp = LinearProgram::unit_box(vec![-3.0, -2.0, -1.0]);
    lp.add_le(vec![1.0, 1.0, 1.0], 2.0);
    lp.add_eq(vec![1.0, 2.0, 0.0], 1.0);
    let sol = solve_lp(&lp, 1e-9)?;
    println!("status    {:?}", sol.status);
    println!("x         {:?}", sol.x);
    println!("objective {}", sol.objective);
    println!("gap       {:?}", sol.relative_gap());
    if let Some(dual) = &sol.dual {
        println!("dual      {dual:?}");
    }
    Ok(())
}
