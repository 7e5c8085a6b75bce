namespace habitat {}
