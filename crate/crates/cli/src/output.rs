//! Artifact writers: CSV with shortest round-trip numbers, pretty JSON
//! with struct-ordered keys, and generated plotting scripts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::CliError;

/// Shortest decimal representation that round-trips the exact f64; both
/// human-readable and bit-faithful.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = String>,
{
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn join_row(fields: &[String]) -> String {
    fields.join(",")
}

/// Path of the generated plotting script next to a data file.
pub fn plot_script_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    output.with_file_name(format!("{stem}_plot.py"))
}

/// Plotting is a generated artifact, not a runtime dependency: rendering
/// the figures is optional and happens outside this tool.
pub fn trajectory_plot_script(csv_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "#!/usr/bin/env python3");
    let _ = writeln!(s, "# Renders the sampled Bloch trajectory in the xz-plane.");
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "import matplotlib.pyplot as plt");
    let _ = writeln!(s);
    let _ = writeln!(s, "sx, sz = [], []");
    let _ = writeln!(s, "with open({csv_name:?}) as fh:");
    let _ = writeln!(s, "    for row in csv.DictReader(fh):");
    let _ = writeln!(s, "        sx.append(float(row['Sx']))");
    let _ = writeln!(s, "        sz.append(float(row['Sz']))");
    let _ = writeln!(s);
    let _ = writeln!(s, "fig, ax = plt.subplots(figsize=(6, 6))");
    let _ = writeln!(s, "ax.plot(sx, sz, lw=0.4)");
    let _ = writeln!(s, "ax.set_xlabel('$S_x$')");
    let _ = writeln!(s, "ax.set_ylabel('$S_z$')");
    let _ = writeln!(s, "ax.set_aspect('equal')");
    let _ = writeln!(s, "ax.add_artist(plt.Circle((0, 0), 1.0, fill=False, ls=':', color='gray'))");
    let _ = writeln!(s, "fig.savefig('trajectory.png', dpi=200, bbox_inches='tight')");
    let _ = writeln!(s, "print('wrote trajectory.png')");
    s
}

pub fn field_plot_script(csv_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "#!/usr/bin/env python3");
    let _ = writeln!(s, "# Renders the velocity field on the lower half-disk, one panel per time.");
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "from collections import defaultdict");
    let _ = writeln!(s, "import matplotlib.pyplot as plt");
    let _ = writeln!(s);
    let _ = writeln!(s, "panels = defaultdict(lambda: ([], [], [], []))");
    let _ = writeln!(s, "with open({csv_name:?}) as fh:");
    let _ = writeln!(s, "    for row in csv.DictReader(fh):");
    let _ = writeln!(s, "        if row['singular'] == 'true':");
    let _ = writeln!(s, "            continue");
    let _ = writeln!(s, "        x, z, vx, vz = panels[row['t']]");
    let _ = writeln!(s, "        x.append(float(row['x']))");
    let _ = writeln!(s, "        z.append(float(row['z']))");
    let _ = writeln!(s, "        vx.append(float(row['vx']))");
    let _ = writeln!(s, "        vz.append(float(row['vz']))");
    let _ = writeln!(s);
    let _ = writeln!(s, "fig, axes = plt.subplots(1, len(panels), figsize=(6 * len(panels), 6))");
    let _ = writeln!(s, "if len(panels) == 1:");
    let _ = writeln!(s, "    axes = [axes]");
    let _ = writeln!(s, "for ax, (t, (x, z, vx, vz)) in zip(axes, sorted(panels.items(), key=lambda kv: float(kv[0]))):");
    let _ = writeln!(s, "    ax.quiver(x, z, vx, vz, angles='xy')");
    let _ = writeln!(s, "    ax.set_title(f't = {{t}}')");
    let _ = writeln!(s, "    ax.set_xlabel('$x$')");
    let _ = writeln!(s, "    ax.set_ylabel('$z$')");
    let _ = writeln!(s, "    ax.set_aspect('equal')");
    let _ = writeln!(s, "fig.savefig('field.png', dpi=200, bbox_inches='tight')");
    let _ = writeln!(s, "print('wrote field.png')");
    s
}
