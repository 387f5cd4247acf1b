use std::io::Write;

/// Writes a gnuplot script plotting `|C_n|` from correlation CSVs on log-log axes,
/// with the reference law `n⁻² (ln n)⁴`.
pub fn write_gnuplot_script<W: Write>(w: &mut W, csv_files: &[String]) -> std::io::Result<()> {
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale xy")?;
    writeln!(w, "set xlabel 'n'")?;
    writeln!(w, "set ylabel '|C_n|'")?;
    writeln!(w, "set key top right")?;
    write!(w, "plot ")?;
    for f in csv_files {
        write!(
            w,
            "'{f}' every ::1 using 1:(abs($2)) with linespoints title '{f}', "
        )?;
    }
    writeln!(
        w,
        "x**-2*log(x)**4 with lines dashtype 2 title 'n^-2 (ln n)^4'"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_mentions_every_file() {
        let mut buf = Vec::new();
        write_gnuplot_script(&mut buf, &["a.csv".into(), "b.csv".into()]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("'a.csv'") && s.contains("'b.csv'"));
    }
}
