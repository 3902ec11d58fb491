//! Regenerates the bundled `.clip` files from the authoring code.

use std::path::Path;

use stagebot_core::animation::authoring::author_builtin_clips;
use stagebot_core::robot::RobotModel;

fn main() -> stagebot_core::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/clips");
    let model = RobotModel::builtin();
    for clip in author_builtin_clips(&model) {
        let path = dir.join(format!("{}.clip", clip.name));
        clip.save(&path)?;
        println!("wrote {} ({} frames)", path.display(), clip.frames.len());
    }
    Ok(())
}
