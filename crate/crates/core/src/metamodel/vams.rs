use std::fmt::Write as _;

use super::{format_sci, MetamodelError, PolyMetamodel};

/// Template parameters for [`emit_vams`].
#[derive(Debug, Clone, PartialEq)]
pub struct VamsOptions {
    pub module_name: String,
    /// Coefficient file the module reads at time zero.
    pub csv_file: String,
    /// Default widths bound into the module parameters (m).
    pub wp: f64,
    pub wn: f64,
}

impl Default for VamsOptions {
    fn default() -> Self {
        Self {
            module_name: "vco_metamodel".into(),
            csv_file: "metamodel.csv".into(),
            wp: 20e-6,
            wn: 10e-6,
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

/// Render a behavioural VCO module that loads `opts.csv_file` in its
/// `initial` block, folds the width part of every term into per-term
/// coefficients, and toggles a digital output at half the modelled period.
///
/// The text depends only on the model's term count and the options, so two
/// emissions of the same model are byte-identical.
pub fn emit_vams(model: &PolyMetamodel, opts: &VamsOptions) -> Result<String, MetamodelError> {
    if model.is_empty() {
        return Err(MetamodelError::EmptyModel);
    }
    if !is_identifier(&opts.module_name) {
        return Err(MetamodelError::InvalidInput(format!(
            "`{}` is not a Verilog identifier",
            opts.module_name
        )));
    }
    if opts.csv_file.contains('"') || opts.csv_file.contains('\n') {
        return Err(MetamodelError::InvalidInput(
            "coefficient file name must not contain quotes or newlines".into(),
        ));
    }
    let k = model.len();
    let mut s = String::new();
    let w = &mut s;
    // writes into a String cannot fail
    let _ = writeln!(w, "`timescale 10ps / 1ps");
    let _ = writeln!(w, "`include \"disciplines.vams\"");
    let _ = writeln!(w);
    let _ = writeln!(w, "module {}(out, in);", opts.module_name);
    let _ = writeln!(w, "    output out;");
    let _ = writeln!(w, "    input in;");
    let _ = writeln!(w, "    reg out;");
    let _ = writeln!(w, "    electrical in;");
    let _ = writeln!(w);
    let _ = writeln!(w, "    parameter integer K = {k};");
    let _ = writeln!(w, "    parameter real wp = {};", format_sci(opts.wp));
    let _ = writeln!(w, "    parameter real wn = {};", format_sci(opts.wn));
    let _ = writeln!(w);
    let _ = writeln!(w, "    real bf[0:K-1], bp[0:K-1], pv[0:K-1];");
    let _ = writeln!(w, "    real p1, p2, p3, betaf, betap;");
    let _ = writeln!(w, "    real vc, freq, power;");
    let _ = writeln!(w, "    integer metaf, readfile, i;");
    let _ = writeln!(w);
    let _ = writeln!(w, "    initial");
    let _ = writeln!(w, "    begin");
    let _ = writeln!(w, "        out = 0;");
    let _ = writeln!(w, "        i = 0;");
    let _ = writeln!(w, "        metaf = $fopen(\"{}\", \"r\");", opts.csv_file);
    let _ = writeln!(w, "        while (!$feof(metaf) && i < K)");
    let _ = writeln!(w, "        begin");
    let _ = writeln!(
        w,
        "            readfile = $fscanf(metaf, \"%d,%d,%d,%e,%e\\n\", p1, p2, p3, betaf, betap);"
    );
    let _ = writeln!(w, "            bf[i] = pow(wp, p1) * pow(wn, p2) * betaf;");
    let _ = writeln!(w, "            bp[i] = pow(wp, p1) * pow(wn, p2) * betap;");
    let _ = writeln!(w, "            pv[i] = p3;");
    let _ = writeln!(w, "            i = i + 1;");
    let _ = writeln!(w, "        end");
    let _ = writeln!(w, "        $fclose(metaf);");
    let _ = writeln!(w, "    end");
    let _ = writeln!(w);
    let _ = writeln!(w, "    always");
    let _ = writeln!(w, "    begin");
    let _ = writeln!(w, "        vc = V(in);");
    let _ = writeln!(w, "        freq = 0;");
    let _ = writeln!(w, "        power = 0;");
    let _ = writeln!(w, "        for (i = 0; i < K; i = i + 1)");
    let _ = writeln!(w, "        begin");
    let _ = writeln!(w, "            freq = freq + bf[i] * pow(vc, pv[i]);");
    let _ = writeln!(w, "            power = power + bp[i] * pow(vc, pv[i]);");
    let _ = writeln!(w, "        end");
    let _ = writeln!(w, "        #(0.5 / freq / 10p)");
    let _ = writeln!(w, "        out = ~out;");
    let _ = writeln!(w, "    end");
    let _ = writeln!(w, "endmodule");
    Ok(s)
}
