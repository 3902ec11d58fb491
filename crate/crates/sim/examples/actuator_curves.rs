//! Torque-speed envelope and noise level of the three actuator types.

use stagebot_core::actuator::{friction, noise_std, torque_limits, ActuatorTable};
use stagebot_core::robot::ActuatorType;

fn main() {
    let table = ActuatorTable::builtin();
    for kind in ActuatorType::ALL {
        let p = table.get(kind);
        println!("{} (kp {}, kd {}, armature {})", kind.name(), p.kp, p.kd, p.armature);
        println!("  {:>7} {:>8} {:>9} {:>10}", "qd", "tau_hi", "friction", "noise std");
        for i in 0..=8 {
            let qd = p.qd_max * i as f64 / 8.0;
            println!(
                "  {qd:7.2} {:8.3} {:9.4} {:10.3e}",
                torque_limits(p, qd).1,
                friction(p, qd),
                noise_std(p, qd)
            );
        }
    }
}
