package garage;

public class Body {
    private String color;
}
