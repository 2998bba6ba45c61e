// cart widget placeholder
